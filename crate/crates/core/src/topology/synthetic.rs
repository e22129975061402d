use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tiers::DEFAULT_CP_ASNS;
use super::{AsGraph, Asn, GraphBuilder};

/// Shape of a generated Internet-like topology.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticParams {
    pub ases: usize,
    /// Provider-free ASes, fully meshed by peering.
    pub tier1: usize,
    /// Fraction of ASes that sell transit.
    pub transit_frac: f64,
    /// Content providers, taken from the default list (at most its length).
    pub content_providers: usize,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams { ases: 5000, tier1: 13, transit_frac: 0.15, content_providers: 10, seed: 1 }
    }
}

/// ASN of the `i`-th tier-1 AS in generated graphs.
pub fn synthetic_tier1_asn(i: usize) -> Asn {
    1 + i as Asn
}

/// Builds a provider hierarchy by preferential attachment: every AS buys
/// transit only from ASes created before it, so there are no provider cycles.
/// Tier-1 ASNs are `1..=tier1`; the rest start at 100.
pub fn synthetic_internet(p: &SyntheticParams) -> AsGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut b = GraphBuilder::new();
    let tier1: Vec<Asn> = (0..p.tier1).map(synthetic_tier1_asn).collect();
    for (i, &a) in tier1.iter().enumerate() {
        b.add_node(a);
        for &c in &tier1[i + 1..] {
            let _ = b.add_peers(a, c);
        }
    }
    let rest = p.ases.saturating_sub(p.tier1);
    let n_transit = ((p.ases as f64 * p.transit_frac) as usize).min(rest);
    let n_cp = p.content_providers.min(DEFAULT_CP_ASNS.len()).min(rest - n_transit);

    // Sellers of transit with their attachment weight (customers + 1).
    let mut sellers: Vec<Asn> = tier1.clone();
    let mut weight: Vec<f64> = vec![4.0; tier1.len()];
    let mut next_asn: Asn = 100;
    // Fresh ASNs skip the ones reserved for content providers.
    let mut fresh = || loop {
        let a = next_asn;
        next_asn += 1;
        if !DEFAULT_CP_ASNS.contains(&a) {
            return a;
        }
    };

    let pick = |rng: &mut ChaCha8Rng, weight: &[f64], k: usize, limit: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        let dist = WeightedIndex::new(&weight[..limit]).expect("positive weights");
        for _ in 0..k * 8 {
            if out.len() == k.min(limit) {
                break;
            }
            let i = dist.sample(rng);
            if !out.contains(&i) {
                out.push(i);
            }
        }
        out
    };

    for _ in 0..n_transit {
        let a = fresh();
        let k = match rng.gen_range(0..10) {
            0..=3 => 1,
            4..=7 => 2,
            _ => 3,
        };
        for i in pick(&mut rng, &weight, k, sellers.len()) {
            let _ = b.add_provider_customer(sellers[i], a);
            weight[i] += 1.0;
        }
        sellers.push(a);
        weight.push(1.0);
    }
    // Lateral peering inside the transit core.
    for t in p.tier1..sellers.len() {
        for _ in 0..rng.gen_range(0..4) {
            let u = sellers[rng.gen_range(p.tier1..sellers.len())];
            if u != sellers[t] && !b.has_edge(u, sellers[t]) {
                let _ = b.add_peers(u, sellers[t]);
            }
        }
    }
    for &cp in &DEFAULT_CP_ASNS[..n_cp] {
        for i in pick(&mut rng, &weight, 2, sellers.len()) {
            let _ = b.add_provider_customer(sellers[i], cp);
        }
        for _ in 0..rng.gen_range(20..60) {
            let u = sellers[rng.gen_range(0..sellers.len())];
            if !b.has_edge(u, cp) {
                let _ = b.add_peers(u, cp);
            }
        }
    }
    let mut stubs = Vec::new();
    for _ in 0..rest - n_transit - n_cp {
        let a = fresh();
        let k = match rng.gen_range(0..20) {
            0..=10 => 1,
            11..=17 => 2,
            _ => 3,
        };
        for i in pick(&mut rng, &weight, k, sellers.len()) {
            let _ = b.add_provider_customer(sellers[i], a);
            weight[i] += 0.5;
        }
        if !stubs.is_empty() && rng.gen_bool(0.1) {
            let u = stubs[rng.gen_range(0..stubs.len())];
            if !b.has_edge(u, a) {
                let _ = b.add_peers(u, a);
            }
        }
        stubs.push(a);
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{classify_tiers, Relationship, Tier, TierConfig};

    #[test]
    fn generated_graph_is_a_hierarchy() {
        let p = SyntheticParams { ases: 1500, ..Default::default() };
        let g = synthetic_internet(&p);
        assert_eq!(g.len(), 1500);
        assert!(!g.has_provider_cycle());
        let provider_free: Vec<Asn> =
            g.ids().filter(|&v| g.count(v, Relationship::Provider) == 0).map(|v| g.asn(v)).collect();
        assert_eq!(provider_free, (1..=13).collect::<Vec<_>>());
        let cfg = TierConfig { tier1_seed: Some(provider_free), ..Default::default() };
        let tiers = classify_tiers(&g, &cfg).unwrap();
        let no_customers = g.ids().filter(|&v| g.count(v, Relationship::Customer) == 0).count();
        assert!(no_customers * 10 > g.len() * 8, "{no_customers} ASes without customers");
        assert_eq!(tiers.iter().filter(|&&t| t == Tier::Cp).count(), 10);
        assert_eq!(synthetic_internet(&p).edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}
