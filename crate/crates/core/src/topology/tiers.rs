use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{AsGraph, AsId, Asn, Relationship, TopologyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Tier1,
    Tier2,
    Tier3,
    Cp,
    SmallCp,
    Smdg,
    StubX,
    Stub,
}

impl Tier {
    pub const ALL: [Tier; 8] =
        [Tier::Tier1, Tier::Tier2, Tier::Tier3, Tier::Cp, Tier::SmallCp, Tier::Smdg, Tier::StubX, Tier::Stub];

    pub fn name(self) -> &'static str {
        match self {
            Tier::Tier1 => "T1",
            Tier::Tier2 => "T2",
            Tier::Tier3 => "T3",
            Tier::Cp => "CP",
            Tier::SmallCp => "SmallCP",
            Tier::Smdg => "SMDG",
            Tier::StubX => "StubX",
            Tier::Stub => "Stub",
        }
    }

    pub fn is_stub(self) -> bool {
        matches!(self, Tier::Stub | Tier::StubX)
    }
}

/// Well-known content-provider networks.
pub const DEFAULT_CP_ASNS: [Asn; 17] = [
    15169, 8075, 20940, 22822, 32934, 15133, 16265, 16509, 2906, 23286, 40428, 714, 10310, 38365, 14907, 13414,
    4837,
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierConfig {
    /// Explicit tier-1 list. When absent, the largest provider-free ASes by customer count are used.
    pub tier1_seed: Option<Vec<Asn>>,
    pub tier1_size: usize,
    pub tier2_size: usize,
    pub tier3_size: usize,
    pub cp_asns: Vec<Asn>,
    pub small_cp_size: usize,
}

impl Default for TierConfig {
    fn default() -> Self {
        TierConfig {
            tier1_seed: None,
            tier1_size: 13,
            tier2_size: 100,
            tier3_size: 100,
            cp_asns: DEFAULT_CP_ASNS.to_vec(),
            small_cp_size: 300,
        }
    }
}

/// Assigns every AS exactly one tier. Rules apply in order T1, T2, T3, CP,
/// SmallCP, StubX, Stub, SMDG; degree ties break toward the lower ASN.
pub fn classify_tiers(graph: &AsGraph, cfg: &TierConfig) -> Result<Vec<Tier>, TopologyError> {
    let mut tier: Vec<Option<Tier>> = vec![None; graph.len()];
    let customers = |v: AsId| graph.count(v, Relationship::Customer);
    let peers = |v: AsId| graph.count(v, Relationship::Peer);
    let has_provider = |v: AsId| graph.count(v, Relationship::Provider) > 0;

    match &cfg.tier1_seed {
        Some(seed) => {
            for &asn in seed {
                tier[graph.require(asn)?.index()] = Some(Tier::Tier1);
            }
        }
        None => {
            let picked = top_by(graph, |v| !has_provider(v), customers, cfg.tier1_size, &tier);
            for v in picked {
                tier[v.index()] = Some(Tier::Tier1);
            }
        }
    }
    for (t, size) in [(Tier::Tier2, cfg.tier2_size), (Tier::Tier3, cfg.tier3_size)] {
        for v in top_by(graph, has_provider, customers, size, &tier) {
            tier[v.index()] = Some(t);
        }
    }
    let cps: HashSet<Asn> = cfg.cp_asns.iter().copied().collect();
    for v in graph.ids() {
        if tier[v.index()].is_none() && cps.contains(&graph.asn(v)) {
            tier[v.index()] = Some(Tier::Cp);
        }
    }
    for v in top_by(graph, |v| peers(v) > 0, peers, cfg.small_cp_size, &tier) {
        tier[v.index()] = Some(Tier::SmallCp);
    }
    Ok(graph
        .ids()
        .map(|v| {
            tier[v.index()].unwrap_or(if customers(v) > 0 {
                Tier::Smdg
            } else if peers(v) > 0 {
                Tier::StubX
            } else {
                Tier::Stub
            })
        })
        .collect())
}

// Unassigned ASes passing `eligible`, ranked by `score` descending then ASN.
fn top_by(
    graph: &AsGraph,
    eligible: impl Fn(AsId) -> bool,
    score: impl Fn(AsId) -> usize,
    k: usize,
    tier: &[Option<Tier>],
) -> Vec<AsId> {
    let mut v: Vec<AsId> = graph.ids().filter(|&v| tier[v.index()].is_none() && eligible(v)).collect();
    // Ids follow ASN order, so the id breaks ties toward the lower ASN.
    v.sort_by_key(|&x| (std::cmp::Reverse(score(x)), x));
    v.truncate(k);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_relationships;

    fn small_cfg() -> TierConfig {
        TierConfig {
            tier1_seed: None,
            tier1_size: 1,
            tier2_size: 1,
            tier3_size: 1,
            cp_asns: vec![50],
            small_cp_size: 1,
        }
    }

    #[test]
    fn toy_graph_hand_classification() {
        // 1: provider-free, 3 customers -> T1
        // 2: customers {4,5} -> T2; 4: customer {6} -> T3
        // 50: listed content provider; 7: peers with 50 and 6 -> SmallCP
        // 5, 6, 8: no customers; 6 peers -> StubX; 5, 8 -> Stub
        let text = "1|2|-1\n1|4|-1\n1|50|-1\n2|4|-1\n2|5|-1\n4|6|-1\n2|7|-1\n7|50|0\n7|6|0\n9|8|-1\n1|9|-1\n";
        let g = parse_relationships(text.as_bytes()).unwrap();
        let tiers = classify_tiers(&g, &small_cfg()).unwrap();
        let t = |a| tiers[g.id_of(a).unwrap().index()];
        assert_eq!(t(1), Tier::Tier1);
        assert_eq!(t(2), Tier::Tier2);
        // 4 and 9 both have one customer; the lower ASN wins.
        assert_eq!(t(4), Tier::Tier3);
        assert_eq!(t(9), Tier::Smdg);
        assert_eq!(t(50), Tier::Cp);
        assert_eq!(t(7), Tier::SmallCp);
        assert_eq!(t(6), Tier::StubX);
        assert_eq!(t(5), Tier::Stub);
        assert_eq!(t(8), Tier::Stub);
    }

    #[test]
    fn explicit_seed_and_missing_seed() {
        let g = parse_relationships("1|2|-1\n3|2|-1\n".as_bytes()).unwrap();
        let mut cfg = small_cfg();
        cfg.tier1_seed = Some(vec![3]);
        let tiers = classify_tiers(&g, &cfg).unwrap();
        assert_eq!(tiers[g.id_of(3).unwrap().index()], Tier::Tier1);
        cfg.tier1_seed = Some(vec![77]);
        assert!(classify_tiers(&g, &cfg).is_err());
    }

    #[test]
    fn default_sizes_fill_on_large_graphs() {
        // 20 provider-free roots, each with its own 12 mid-level customers, each with one stub.
        let mut text = String::new();
        let mut next = 1000;
        for r in 1..=20 {
            for _ in 0..12 {
                text += &format!("{r}|{next}|-1\n{next}|{}|-1\n", next + 1);
                next += 2;
            }
        }
        let g = parse_relationships(text.as_bytes()).unwrap();
        let tiers = classify_tiers(&g, &TierConfig::default()).unwrap();
        let count = |t| tiers.iter().filter(|&&x| x == t).count();
        assert_eq!(count(Tier::Tier1), 13);
        assert_eq!(count(Tier::Tier2), 100);
        assert_eq!(count(Tier::Tier3), 100);
        assert_eq!(tiers.len(), g.len());
    }
}
