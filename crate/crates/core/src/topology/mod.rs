//! AS-level topology: relationship graph, parsing, cleanup and tier labels.

mod io;
mod ixp;
mod preprocess;
mod synthetic;
mod tiers;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use io::{parse_asn_list, parse_ixp_records, parse_relationships, write_relationships};
pub use ixp::{augment_with_ixps, IxpRecord, IxpReport};
pub use preprocess::{preprocess, PreprocessReport, DEFAULT_MIN_DEGREE};
pub use synthetic::{synthetic_internet, synthetic_tier1_asn, SyntheticParams};
pub use tiers::{classify_tiers, Tier, TierConfig, DEFAULT_CP_ASNS};

/// Public AS number as it appears in input files.
pub type Asn = u32;

/// Dense index of an AS inside one [`AsGraph`]. Ids follow ascending ASN order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AsId(pub u32);

impl AsId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Role of a neighbor relative to the AS owning the adjacency entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relationship {
    Customer,
    Peer,
    Provider,
}

impl Relationship {
    /// The same edge seen from the other endpoint.
    pub fn reverse(self) -> Relationship {
        match self {
            Relationship::Customer => Relationship::Provider,
            Relationship::Provider => Relationship::Customer,
            Relationship::Peer => Relationship::Peer,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: conflicting relationship between AS{a} and AS{b}")]
    Conflict { line: usize, a: Asn, b: Asn },
    #[error("AS{0} is not in the graph")]
    UnknownAsn(Asn),
    #[error("{0}")]
    Invalid(String),
}

/// One undirected edge, listed once. For customer-provider edges `a` is the provider.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: AsId,
    pub b: AsId,
    pub peer: bool,
}

/// Immutable AS graph in CSR layout; each adjacency list is sorted by neighbor id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsGraph {
    asns: Vec<Asn>,
    index: HashMap<Asn, AsId>,
    offsets: Vec<usize>,
    adj: Vec<(AsId, Relationship)>,
}

/// Edge list keyed by ASN, used to build graphs.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    nodes: std::collections::BTreeSet<Asn>,
    // (low, high) -> relationship of `high` relative to `low`
    edges: std::collections::BTreeMap<(Asn, Asn), Relationship>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, asn: Asn) -> &mut Self {
        self.nodes.insert(asn);
        self
    }

    /// Adds `provider -> customer`. Returns `Err` with the existing relationship on conflict.
    pub fn add_provider_customer(&mut self, provider: Asn, customer: Asn) -> Result<bool, Relationship> {
        self.insert(provider, customer, Relationship::Customer)
    }

    pub fn add_peers(&mut self, a: Asn, b: Asn) -> Result<bool, Relationship> {
        self.insert(a, b, Relationship::Peer)
    }

    pub fn has_edge(&self, a: Asn, b: Asn) -> bool {
        self.edges.contains_key(&(a.min(b), a.max(b)))
    }

    // `rel` is the role of `b` relative to `a`. Ok(false) for an exact duplicate.
    fn insert(&mut self, a: Asn, b: Asn, rel: Relationship) -> Result<bool, Relationship> {
        let (key, rel) = if a <= b { ((a, b), rel) } else { ((b, a), rel.reverse()) };
        if let Some(&old) = self.edges.get(&key) {
            return if old == rel { Ok(false) } else { Err(old) };
        }
        self.nodes.insert(a);
        self.nodes.insert(b);
        self.edges.insert(key, rel);
        Ok(true)
    }

    pub fn build(&self) -> AsGraph {
        let asns: Vec<Asn> = self.nodes.iter().copied().collect();
        let index: HashMap<Asn, AsId> =
            asns.iter().enumerate().map(|(i, &a)| (a, AsId(i as u32))).collect();
        let mut lists: Vec<Vec<(AsId, Relationship)>> = vec![Vec::new(); asns.len()];
        for (&(lo, hi), &rel) in &self.edges {
            let (l, h) = (index[&lo], index[&hi]);
            lists[l.index()].push((h, rel));
            lists[h.index()].push((l, rel.reverse()));
        }
        let mut offsets = Vec::with_capacity(asns.len() + 1);
        let mut adj = Vec::with_capacity(self.edges.len() * 2);
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            adj.extend(list);
            offsets.push(adj.len());
        }
        AsGraph { asns, index, offsets, adj }
    }
}

impl AsGraph {
    pub fn len(&self) -> usize {
        self.asns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.asns.is_empty()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = AsId> + Clone {
        (0..self.asns.len() as u32).map(AsId)
    }

    pub fn asn(&self, id: AsId) -> Asn {
        self.asns[id.index()]
    }

    pub fn asns(&self) -> &[Asn] {
        &self.asns
    }

    pub fn id_of(&self, asn: Asn) -> Option<AsId> {
        self.index.get(&asn).copied()
    }

    pub fn require(&self, asn: Asn) -> Result<AsId, TopologyError> {
        self.id_of(asn).ok_or(TopologyError::UnknownAsn(asn))
    }

    /// Neighbors of `id` with their role relative to `id`, sorted by neighbor id.
    #[inline]
    pub fn neighbors(&self, id: AsId) -> &[(AsId, Relationship)] {
        &self.adj[self.offsets[id.index()]..self.offsets[id.index() + 1]]
    }

    pub fn neighbors_with(&self, id: AsId, rel: Relationship) -> impl Iterator<Item = AsId> + '_ {
        self.neighbors(id).iter().filter(move |(_, r)| *r == rel).map(|(n, _)| *n)
    }

    pub fn customers(&self, id: AsId) -> impl Iterator<Item = AsId> + '_ {
        self.neighbors_with(id, Relationship::Customer)
    }

    pub fn providers(&self, id: AsId) -> impl Iterator<Item = AsId> + '_ {
        self.neighbors_with(id, Relationship::Provider)
    }

    pub fn peers(&self, id: AsId) -> impl Iterator<Item = AsId> + '_ {
        self.neighbors_with(id, Relationship::Peer)
    }

    pub fn degree(&self, id: AsId) -> usize {
        self.neighbors(id).len()
    }

    pub fn count(&self, id: AsId, rel: Relationship) -> usize {
        self.neighbors(id).iter().filter(|(_, r)| *r == rel).count()
    }

    /// Role of `b` relative to `a`, if adjacent.
    pub fn relationship(&self, a: AsId, b: AsId) -> Option<Relationship> {
        let list = self.neighbors(a);
        list.binary_search_by_key(&b, |(n, _)| *n).ok().map(|i| list[i].1)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.ids().flat_map(move |a| {
            self.neighbors(a).iter().filter_map(move |&(b, rel)| match rel {
                Relationship::Customer => Some(Edge { a, b, peer: false }),
                Relationship::Peer if a < b => Some(Edge { a, b, peer: true }),
                _ => None,
            })
        })
    }

    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new();
        for &asn in &self.asns {
            b.add_node(asn);
        }
        for e in self.edges() {
            let (x, y) = (self.asn(e.a), self.asn(e.b));
            let _ = if e.peer { b.add_peers(x, y) } else { b.add_provider_customer(x, y) };
        }
        b
    }

    /// Copy of the graph with the link between two ASes removed (no-op if absent).
    pub fn without_link(&self, a: AsId, b: AsId) -> AsGraph {
        let mut builder = self.to_builder();
        let (x, y) = (self.asn(a), self.asn(b));
        builder.edges.remove(&(x.min(y), x.max(y)));
        builder.build()
    }

    /// Subgraph induced by the ASes for which `keep` holds. Ids are re-densified.
    pub fn induced(&self, keep: impl Fn(AsId) -> bool) -> AsGraph {
        let mut b = GraphBuilder::new();
        for id in self.ids().filter(|&i| keep(i)) {
            b.add_node(self.asn(id));
        }
        for e in self.edges().filter(|e| keep(e.a) && keep(e.b)) {
            let (x, y) = (self.asn(e.a), self.asn(e.b));
            let _ = if e.peer { b.add_peers(x, y) } else { b.add_provider_customer(x, y) };
        }
        b.build()
    }

    /// True if following customer-to-provider edges can return to the start.
    pub fn has_provider_cycle(&self) -> bool {
        // Kahn's algorithm over provider->customer arcs.
        let mut indeg: Vec<usize> = self.ids().map(|v| self.count(v, Relationship::Provider)).collect();
        let mut queue: Vec<AsId> = self.ids().filter(|v| indeg[v.index()] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for c in self.customers(v) {
                indeg[c.index()] -= 1;
                if indeg[c.index()] == 0 {
                    queue.push(c);
                }
            }
        }
        seen != self.len()
    }
}
