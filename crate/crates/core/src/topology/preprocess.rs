use std::collections::BTreeSet;

use serde::Serialize;

use super::{AsGraph, Asn, Relationship, TopologyError};

/// Provider-free ASes with total degree below this are pruned.
pub const DEFAULT_MIN_DEGREE: usize = 10;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessReport {
    /// Removed ASNs, ascending.
    pub removed: Vec<Asn>,
    /// Surviving provider-free ASes that are not in the seed (kept for their degree).
    pub provider_free_survivors: Vec<Asn>,
}

/// Repeatedly removes ASes that have no providers, are not in `tier1_seed`, and
/// have fewer than `min_degree` neighbors, until nothing else qualifies.
/// The result is re-indexed densely.
pub fn preprocess(
    graph: &AsGraph,
    tier1_seed: &[Asn],
    min_degree: usize,
) -> Result<(AsGraph, PreprocessReport), TopologyError> {
    if tier1_seed.is_empty() {
        return Err(TopologyError::Invalid("tier-1 seed list is empty".into()));
    }
    let mut seed = vec![false; graph.len()];
    for &asn in tier1_seed {
        seed[graph.require(asn)?.index()] = true;
    }

    let n = graph.len();
    let mut alive = vec![true; n];
    let mut providers: Vec<usize> = graph.ids().map(|v| graph.count(v, Relationship::Provider)).collect();
    let mut degree: Vec<usize> = graph.ids().map(|v| graph.degree(v)).collect();
    let qualifies = |v: usize, providers: &[usize], degree: &[usize]| {
        !seed[v] && providers[v] == 0 && degree[v] < min_degree
    };

    let mut stack: Vec<usize> = (0..n).filter(|&v| qualifies(v, &providers, &degree)).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] || !qualifies(v, &providers, &degree) {
            continue;
        }
        alive[v] = false;
        for &(u, rel) in graph.neighbors(super::AsId(v as u32)) {
            let u = u.index();
            if !alive[u] {
                continue;
            }
            degree[u] -= 1;
            // v was a provider of u when u is v's customer.
            if rel == Relationship::Customer {
                providers[u] -= 1;
            }
            if qualifies(u, &providers, &degree) {
                stack.push(u);
            }
        }
    }

    let removed: Vec<Asn> = graph.ids().filter(|v| !alive[v.index()]).map(|v| graph.asn(v)).collect();
    let out = graph.induced(|v| alive[v.index()]);
    let seed_set: BTreeSet<Asn> = tier1_seed.iter().copied().collect();
    let provider_free_survivors = out
        .ids()
        .filter(|&v| out.count(v, Relationship::Provider) == 0 && !seed_set.contains(&out.asn(v)))
        .map(|v| out.asn(v))
        .collect();
    Ok((out, PreprocessReport { removed, provider_free_survivors }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{parse_relationships, GraphBuilder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Reference: rescan everything until a pass removes nothing.
    fn naive(graph: &AsGraph, seed: &[Asn], min_degree: usize) -> BTreeSet<Asn> {
        let mut alive: BTreeSet<Asn> = graph.asns().iter().copied().collect();
        loop {
            let doomed: Vec<Asn> = alive
                .iter()
                .copied()
                .filter(|&a| {
                    let id = graph.id_of(a).unwrap();
                    let live = |r: Option<Relationship>| {
                        graph
                            .neighbors(id)
                            .iter()
                            .filter(|(n, rel)| alive.contains(&graph.asn(*n)) && r.is_none_or(|r| r == *rel))
                            .count()
                    };
                    !seed.contains(&a) && live(Some(Relationship::Provider)) == 0 && live(None) < min_degree
                })
                .collect();
            if doomed.is_empty() {
                return alive;
            }
            for a in doomed {
                alive.remove(&a);
            }
        }
    }

    #[test]
    fn chain_cascades() {
        // 1 is the seed; 5 -> 6 -> 7 hangs off nothing else.
        let g = parse_relationships("1|2|-1\n1|3|-1\n5|6|-1\n6|7|-1\n2|3|0\n".as_bytes()).unwrap();
        let (out, report) = preprocess(&g, &[1], 3).unwrap();
        assert_eq!(report.removed, vec![5, 6, 7]);
        assert_eq!(out.asns(), &[1, 2, 3]);
    }

    #[test]
    fn chain_child_with_second_provider_survives() {
        let g = parse_relationships("1|2|-1\n5|6|-1\n1|6|-1\n6|7|-1\n".as_bytes()).unwrap();
        let (out, report) = preprocess(&g, &[1], 3).unwrap();
        assert_eq!(report.removed, vec![5]);
        assert_eq!(out.asns(), &[1, 2, 6, 7]);
    }

    #[test]
    fn seed_errors() {
        let g = parse_relationships("1|2|-1\n".as_bytes()).unwrap();
        assert!(preprocess(&g, &[], 10).is_err());
        assert!(preprocess(&g, &[42], 10).is_err());
    }

    #[test]
    fn matches_naive_rescan_on_random_graphs() {
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = GraphBuilder::new();
            let n = 50u32;
            for a in 1..=n {
                b.add_node(a);
            }
            for _ in 0..70 {
                let (x, y) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
                if x == y {
                    continue;
                }
                let _ = if rng.gen_bool(0.3) { b.add_peers(x, y) } else { b.add_provider_customer(x, y) };
            }
            let g = b.build();
            let seeds = [1, 2, 3];
            let min_degree = rng.gen_range(1..6);
            let (out, report) = preprocess(&g, &seeds, min_degree).unwrap();
            let expected = naive(&g, &seeds, min_degree);
            assert_eq!(out.asns().iter().copied().collect::<BTreeSet<_>>(), expected, "seed {seed}");
            assert_eq!(report.removed.len() + out.len(), g.len());
            for v in out.ids() {
                let a = out.asn(v);
                let has_provider = out.count(v, Relationship::Provider) > 0;
                assert!(has_provider || seeds.contains(&a) || out.degree(v) >= min_degree);
            }
        }
    }
}
