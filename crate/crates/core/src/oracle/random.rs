use rand::Rng;

use crate::routing::Deployment;
use crate::topology::{AsGraph, Asn, GraphBuilder};

#[derive(Clone, Copy, Debug)]
pub struct RandomGraphParams {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Number of hierarchy levels; customer-provider edges always point down a level or more.
    pub levels: u32,
    pub edge_prob: f64,
    /// Chance that an edge between different levels is a peering link.
    pub peer_prob: f64,
}

impl Default for RandomGraphParams {
    fn default() -> Self {
        RandomGraphParams { min_nodes: 4, max_nodes: 12, levels: 4, edge_prob: 0.35, peer_prob: 0.2 }
    }
}

/// Random AS graph without customer-provider cycles. ASNs are `1..=n`.
pub fn random_hierarchy<R: Rng>(rng: &mut R, p: &RandomGraphParams) -> AsGraph {
    let n = rng.gen_range(p.min_nodes..=p.max_nodes);
    let level: Vec<u32> = (0..n).map(|_| rng.gen_range(0..p.levels)).collect();
    let mut b = GraphBuilder::new();
    for a in 1..=n as Asn {
        b.add_node(a);
    }
    for i in 0..n {
        for j in i + 1..n {
            if !rng.gen_bool(p.edge_prob) {
                continue;
            }
            let (x, y) = ((i + 1) as Asn, (j + 1) as Asn);
            let _ = match level[i].cmp(&level[j]) {
                _ if rng.gen_bool(p.peer_prob) => b.add_peers(x, y),
                std::cmp::Ordering::Equal => b.add_peers(x, y),
                std::cmp::Ordering::Greater => b.add_provider_customer(x, y),
                std::cmp::Ordering::Less => b.add_provider_customer(y, x),
            };
        }
    }
    b.build()
}

/// Each AS secure with probability `p`.
pub fn random_deployment<R: Rng>(rng: &mut R, graph: &AsGraph, p: f64) -> Deployment {
    Deployment::from_secure(graph.len(), graph.ids().filter(|_| rng.gen_bool(p)).collect::<Vec<_>>())
}
