//! Stable routing outcomes for one destination, an optional attacker and a deployment.
//!
//! [`compute_outcome`] fixes ASes in best-first order of a per-model route key.
//! For the standard preference order that order coincides with the staged
//! schedule from [`stage_schedule`]: every stage fixes routes of one
//! (relationship, security) class by increasing length. Extending a route never
//! yields a smaller key, so a fixed AS never sees a better offer later.

mod mixed;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::topology::{AsGraph, AsId, Relationship};

pub use mixed::{compute_outcome_mixed, wedgie_probe, MixedOutcome, PathState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyModel {
    SecurityFirst,
    SecuritySecond,
    SecurityThird,
    InsecureOnly,
}

impl PolicyModel {
    pub const SECURE_MODELS: [PolicyModel; 3] =
        [PolicyModel::SecurityFirst, PolicyModel::SecuritySecond, PolicyModel::SecurityThird];

    pub fn name(self) -> &'static str {
        match self {
            PolicyModel::SecurityFirst => "first",
            PolicyModel::SecuritySecond => "second",
            PolicyModel::SecurityThird => "third",
            PolicyModel::InsecureOnly => "insecure",
        }
    }
}

/// Local-preference variant. `LengthClasses(k)` ranks customer and peer routes
/// of length at most `k` together by length (customer first at equal length),
/// then longer customer routes, longer peer routes, and provider routes last.
/// `LengthClasses(0)` is the same order as `Standard`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalPref {
    #[default]
    Standard,
    LengthClasses(u32),
}

impl LocalPref {
    /// Rank of a route's relationship class; lower is preferred.
    #[inline]
    pub fn rank(self, rel: Relationship, len: u32) -> u32 {
        let k = match self {
            LocalPref::Standard => 0,
            LocalPref::LengthClasses(k) => k,
        };
        match rel {
            Relationship::Customer if len <= k => 2 * (len - 1),
            Relationship::Peer if len <= k => 2 * (len - 1) + 1,
            Relationship::Customer => 2 * k,
            Relationship::Peer => 2 * k + 1,
            Relationship::Provider => 2 * k + 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub model: PolicyModel,
    pub local_pref: LocalPref,
}

impl Policy {
    pub const fn new(model: PolicyModel) -> Self {
        Policy { model, local_pref: LocalPref::Standard }
    }

    pub const fn with_local_pref(model: PolicyModel, local_pref: LocalPref) -> Self {
        Policy { model, local_pref }
    }

    /// Total preference key of a route as seen by the selecting AS (smaller wins).
    /// `secure` must already account for whether the selecting AS validates.
    #[inline]
    pub fn key(&self, rel: Relationship, len: u32, secure: bool) -> RouteKey {
        let lp = self.local_pref.rank(rel, len);
        let insecure = u32::from(!secure);
        RouteKey(match self.model {
            PolicyModel::SecurityFirst => [insecure, lp, len],
            PolicyModel::SecuritySecond => [lp, insecure, len],
            PolicyModel::SecurityThird => [lp, len, insecure],
            PolicyModel::InsecureOnly => [lp, len, 1],
        })
    }
}

impl From<PolicyModel> for Policy {
    fn from(model: PolicyModel) -> Self {
        Policy::new(model)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RouteKey(pub [u32; 3]);

/// Fixing stages. `Secure*` stages only fix routes that are secure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    SecureCustomer,
    SecurePeer,
    SecureProvider,
    Customer,
    Peer,
    Provider,
}

pub fn stage_schedule(model: PolicyModel) -> &'static [Stage] {
    use Stage::*;
    match model {
        PolicyModel::SecurityFirst => &[SecureCustomer, SecurePeer, SecureProvider, Customer, Peer, Provider],
        PolicyModel::SecuritySecond => &[SecureCustomer, Customer, Peer, SecureProvider, Provider],
        PolicyModel::SecurityThird | PolicyModel::InsecureOnly => &[Customer, Peer, Provider],
    }
}

fn stage_of(model: PolicyModel, rel: Relationship, secure: bool) -> Stage {
    let (secure_stage, plain) = match rel {
        Relationship::Customer => (Stage::SecureCustomer, Stage::Customer),
        Relationship::Peer => (Stage::SecurePeer, Stage::Peer),
        Relationship::Provider => (Stage::SecureProvider, Stage::Provider),
    };
    if secure && stage_schedule(model).contains(&secure_stage) {
        secure_stage
    } else {
        plain
    }
}

/// Which ASes run S*BGP. `simplex` ASes sign their own prefixes only: routes to
/// them can be secure, but they select routes like insecure ASes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Deployment {
    secure: Vec<bool>,
    simplex: Vec<bool>,
}

impl Deployment {
    pub fn empty(n: usize) -> Self {
        Deployment { secure: vec![false; n], simplex: vec![false; n] }
    }

    pub fn from_secure(n: usize, secure: impl IntoIterator<Item = AsId>) -> Self {
        let mut d = Self::empty(n);
        for v in secure {
            d.secure[v.index()] = true;
        }
        d
    }

    pub fn len(&self) -> usize {
        self.secure.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.secure.iter().chain(&self.simplex).any(|&b| b)
    }

    pub fn set_secure(&mut self, v: AsId, on: bool) {
        self.secure[v.index()] = on;
        if on {
            self.simplex[v.index()] = false;
        }
    }

    pub fn set_simplex(&mut self, v: AsId, on: bool) {
        self.simplex[v.index()] = on;
        if on {
            self.secure[v.index()] = false;
        }
    }

    /// Full S*BGP: validates and signs.
    #[inline]
    pub fn is_secure(&self, v: AsId) -> bool {
        self.secure[v.index()]
    }

    #[inline]
    pub fn is_simplex(&self, v: AsId) -> bool {
        self.simplex[v.index()]
    }

    /// Whether routes originated by `v` can be validated.
    #[inline]
    pub fn signs_origin(&self, v: AsId) -> bool {
        self.secure[v.index()] || self.simplex[v.index()]
    }

    pub fn secure_ids(&self) -> impl Iterator<Item = AsId> + '_ {
        self.secure.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| AsId(i as u32))
    }

    pub fn simplex_ids(&self) -> impl Iterator<Item = AsId> + '_ {
        self.simplex.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| AsId(i as u32))
    }

    pub fn secure_count(&self) -> usize {
        self.secure.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Scenario<'a> {
    pub destination: AsId,
    pub attacker: Option<AsId>,
    pub deployment: &'a Deployment,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("deployment covers {got} ASes, graph has {want}")]
    SizeMismatch { got: usize, want: usize },
    #[error("{0} is not in the graph")]
    UnknownAs(AsId),
    #[error("attacker and destination are the same AS")]
    AttackerIsDestination,
    #[error("simplex AS {0} has customers")]
    SimplexTransit(AsId),
}

impl Scenario<'_> {
    pub fn validate(&self, graph: &AsGraph) -> Result<(), ScenarioError> {
        let n = graph.len();
        if self.deployment.len() != n {
            return Err(ScenarioError::SizeMismatch { got: self.deployment.len(), want: n });
        }
        for v in std::iter::once(self.destination).chain(self.attacker) {
            if v.index() >= n {
                return Err(ScenarioError::UnknownAs(v));
            }
        }
        if self.attacker == Some(self.destination) {
            return Err(ScenarioError::AttackerIsDestination);
        }
        if let Some(v) = self.deployment.simplex_ids().find(|&v| graph.customers(v).next().is_some()) {
            return Err(ScenarioError::SimplexTransit(v));
        }
        Ok(())
    }
}

/// Where an AS's routes can end up across tie resolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeadsTo {
    Destination,
    Attacker,
    Mixed,
    Unreachable,
}

impl LeadsTo {
    fn bits(self) -> u8 {
        match self {
            LeadsTo::Unreachable => 0,
            LeadsTo::Destination => 1,
            LeadsTo::Attacker => 2,
            LeadsTo::Mixed => 3,
        }
    }

    fn from_bits(b: u8) -> Self {
        match b {
            0 => LeadsTo::Unreachable,
            1 => LeadsTo::Destination,
            2 => LeadsTo::Attacker,
            _ => LeadsTo::Mixed,
        }
    }

    pub fn union(self, other: LeadsTo) -> LeadsTo {
        LeadsTo::from_bits(self.bits() | other.bits())
    }

    pub fn may_reach_destination(self) -> bool {
        self.bits() & 1 != 0
    }

    pub fn may_reach_attacker(self) -> bool {
        self.bits() & 2 != 0
    }
}

/// The tie set of equally good routes an AS holds in the stable state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteSummary {
    /// Next hops of all tied routes, ascending. Empty for the destination,
    /// the attacker and unreachable ASes.
    pub next_hops: SmallVec<[AsId; 2]>,
    /// Relationship of the next hops to this AS.
    pub rel: Option<Relationship>,
    /// Hops to the destination as perceived (an attacked route counts the fake last hop).
    pub length: u32,
    pub secure: bool,
    pub leads_to: LeadsTo,
    pub stage: Option<Stage>,
}

impl RouteSummary {
    fn unreachable() -> Self {
        RouteSummary {
            next_hops: SmallVec::new(),
            rel: None,
            length: 0,
            secure: false,
            leads_to: LeadsTo::Unreachable,
            stage: None,
        }
    }

    pub fn canonical_next_hop(&self) -> Option<AsId> {
        self.next_hops.first().copied()
    }

    pub fn is_reachable(&self) -> bool {
        self.leads_to != LeadsTo::Unreachable
    }

    /// Whether this route is announced to a neighbor with the given role.
    #[inline]
    pub fn exported_to(&self, neighbor_role: Relationship) -> bool {
        self.is_reachable() && (self.rel.is_none() || self.rel == Some(Relationship::Customer) || neighbor_role == Relationship::Customer)
    }
}

#[derive(Clone, Debug)]
pub struct RoutingOutcome {
    pub destination: AsId,
    pub attacker: Option<AsId>,
    pub routes: Vec<RouteSummary>,
    /// ASes in the order they were fixed (destination and attacker first).
    pub order: Vec<AsId>,
}

impl RoutingOutcome {
    pub fn route(&self, v: AsId) -> &RouteSummary {
        &self.routes[v.index()]
    }

    /// Path obtained by always following the lowest next hop, from `v` to the
    /// destination or attacker (inclusive). Empty if unreachable.
    pub fn canonical_path(&self, v: AsId) -> Vec<AsId> {
        let mut path = Vec::new();
        let mut cur = v;
        if !self.route(v).is_reachable() {
            return path;
        }
        loop {
            path.push(cur);
            match self.route(cur).canonical_next_hop() {
                Some(n) => cur = n,
                None => return path,
            }
        }
    }

    /// For each AS, whether its tied routes traverse `x`: none, some, or all.
    /// Returned as [`LeadsTo`]-style bits: `Destination` = avoids, `Attacker` = traverses.
    pub fn traversal(&self, x: AsId) -> Vec<LeadsTo> {
        let mut out = vec![LeadsTo::Unreachable; self.routes.len()];
        for &v in &self.order {
            let r = self.route(v);
            out[v.index()] = if v == x {
                LeadsTo::Attacker
            } else if r.next_hops.is_empty() {
                LeadsTo::Destination
            } else {
                r.next_hops.iter().fold(LeadsTo::Unreachable, |acc, n| acc.union(out[n.index()]))
            };
        }
        out
    }
}

/// Computes the unique stable state for a homogeneous policy.
pub fn compute_outcome(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    policy: Policy,
) -> Result<RoutingOutcome, ScenarioError> {
    scenario.validate(graph)?;
    let n = graph.len();
    let dep = scenario.deployment;
    let d = scenario.destination;
    let insecure_only = policy.model == PolicyModel::InsecureOnly;

    let mut routes = vec![RouteSummary::unreachable(); n];
    let mut fixed = vec![false; n];
    let mut best: Vec<Option<RouteKey>> = vec![None; n];
    // Candidate (relationship, length, secure) of the current best, per AS.
    let mut cand: Vec<(Relationship, u32, bool)> = vec![(Relationship::Provider, 0, false); n];
    let mut ties: Vec<SmallVec<[AsId; 2]>> = vec![SmallVec::new(); n];
    let mut heap: BinaryHeap<Reverse<(RouteKey, AsId)>> = BinaryHeap::new();
    let mut order = Vec::with_capacity(n);

    routes[d.index()] = RouteSummary {
        next_hops: SmallVec::new(),
        rel: None,
        length: 0,
        secure: !insecure_only && dep.signs_origin(d),
        leads_to: LeadsTo::Destination,
        stage: None,
    };
    if let Some(m) = scenario.attacker {
        routes[m.index()] = RouteSummary {
            next_hops: SmallVec::new(),
            rel: None,
            length: 1,
            secure: false,
            leads_to: LeadsTo::Attacker,
            stage: None,
        };
    }

    let relax = |u: AsId,
                     routes: &[RouteSummary],
                     fixed: &[bool],
                     best: &mut Vec<Option<RouteKey>>,
                     cand: &mut Vec<(Relationship, u32, bool)>,
                     ties: &mut Vec<SmallVec<[AsId; 2]>>,
                     heap: &mut BinaryHeap<Reverse<(RouteKey, AsId)>>| {
        let ru = &routes[u.index()];
        for &(v, role) in graph.neighbors(u) {
            if fixed[v.index()] || !ru.exported_to(role) {
                continue;
            }
            let rel = role.reverse();
            let len = ru.length + 1;
            let secure = ru.secure && dep.is_secure(v) && !insecure_only;
            let key = policy.key(rel, len, secure);
            match best[v.index()] {
                Some(b) if b < key => {}
                Some(b) if b == key => ties[v.index()].push(u),
                _ => {
                    best[v.index()] = Some(key);
                    cand[v.index()] = (rel, len, secure);
                    ties[v.index()].clear();
                    ties[v.index()].push(u);
                    heap.push(Reverse((key, v)));
                }
            }
        }
    };

    for root in std::iter::once(d).chain(scenario.attacker) {
        fixed[root.index()] = true;
        order.push(root);
    }
    for root in std::iter::once(d).chain(scenario.attacker) {
        relax(root, &routes, &fixed, &mut best, &mut cand, &mut ties, &mut heap);
    }

    while let Some(Reverse((key, v))) = heap.pop() {
        if fixed[v.index()] || best[v.index()] != Some(key) {
            continue;
        }
        fixed[v.index()] = true;
        let (rel, length, secure) = cand[v.index()];
        let mut hops = std::mem::take(&mut ties[v.index()]);
        hops.sort_unstable();
        let leads_to = hops.iter().fold(LeadsTo::Unreachable, |acc, h| acc.union(routes[h.index()].leads_to));
        routes[v.index()] = RouteSummary {
            next_hops: hops,
            rel: Some(rel),
            length,
            secure,
            leads_to,
            stage: Some(stage_of(policy.model, rel, secure)),
        };
        order.push(v);
        relax(v, &routes, &fixed, &mut best, &mut cand, &mut ties, &mut heap);
    }

    Ok(RoutingOutcome { destination: d, attacker: scenario.attacker, routes, order })
}

/// Checks that every AS holds exactly the best offers its neighbors export to it.
/// Returns a description of the first violation.
pub fn check_stability(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    policy: Policy,
    outcome: &RoutingOutcome,
) -> Result<(), String> {
    let insecure_only = policy.model == PolicyModel::InsecureOnly;
    for v in graph.ids() {
        if v == scenario.destination || Some(v) == scenario.attacker {
            continue;
        }
        let mut best: Option<RouteKey> = None;
        let mut hops: Vec<AsId> = Vec::new();
        for &(u, role_of_u) in graph.neighbors(v) {
            let ru = outcome.route(u);
            if !ru.exported_to(role_of_u.reverse()) || ru.next_hops.contains(&v) {
                continue;
            }
            let secure = ru.secure && scenario.deployment.is_secure(v) && !insecure_only;
            let key = policy.key(role_of_u, ru.length + 1, secure);
            match best {
                Some(b) if b < key => {}
                Some(b) if b == key => hops.push(u),
                _ => {
                    best = Some(key);
                    hops = vec![u];
                }
            }
        }
        let r = outcome.route(v);
        if r.next_hops.as_slice() != hops.as_slice() {
            return Err(format!("{v}: holds next hops {:?}, best offers come from {hops:?}", r.next_hops));
        }
        if let (Some(b), Some(rel)) = (best, r.rel) {
            if policy.key(rel, r.length, r.secure) != b {
                return Err(format!("{v}: route attributes do not match the best offer"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_relationships;

    fn graph(text: &str) -> AsGraph {
        parse_relationships(text.as_bytes()).unwrap()
    }

    #[test]
    fn schedules() {
        assert_eq!(stage_schedule(PolicyModel::SecurityThird).len(), 3);
        assert_eq!(stage_schedule(PolicyModel::SecuritySecond).len(), 5);
        assert_eq!(stage_schedule(PolicyModel::SecurityFirst).len(), 6);
    }

    #[test]
    fn length_classes_rank() {
        let lp = LocalPref::LengthClasses(2);
        let r = |rel, len| lp.rank(rel, len);
        assert!(r(Relationship::Customer, 1) < r(Relationship::Peer, 1));
        assert!(r(Relationship::Peer, 1) < r(Relationship::Customer, 2));
        assert!(r(Relationship::Peer, 2) < r(Relationship::Customer, 3));
        assert!(r(Relationship::Customer, 9) < r(Relationship::Peer, 3));
        assert!(r(Relationship::Peer, 9) < r(Relationship::Provider, 1));
        for rel in [Relationship::Customer, Relationship::Peer, Relationship::Provider] {
            for len in 1..5 {
                assert_eq!(LocalPref::LengthClasses(0).rank(rel, len), LocalPref::Standard.rank(rel, len));
            }
        }
    }

    #[test]
    fn customer_beats_shorter_provider_route() {
        // d=1. 2 is a provider of 1. 3 is a customer of 2 and provider of 4; 4 provides 1.
        // 3 has a provider route (3-2-1) and a customer route (3-4-1); same length, customer wins.
        let g = graph("2|1|-1\n2|3|-1\n3|4|-1\n4|1|-1\n5|3|-1\n");
        let dep = Deployment::empty(g.len());
        let id = |a| g.id_of(a).unwrap();
        let sc = Scenario { destination: id(1), attacker: None, deployment: &dep };
        let out = compute_outcome(&g, &sc, PolicyModel::SecurityThird.into()).unwrap();
        let r3 = out.route(id(3));
        assert_eq!(r3.rel, Some(Relationship::Customer));
        assert_eq!(r3.next_hops.as_slice(), &[id(4)]);
        // 5 is 3's provider and gets 3's customer route.
        assert_eq!(out.route(id(5)).length, 3);
        check_stability(&g, &sc, PolicyModel::SecurityThird.into(), &out).unwrap();
    }

    #[test]
    fn attacker_ties_are_mixed() {
        // d=1, m=2, both customers of 3; 4 is a customer of 3.
        let g = graph("3|1|-1\n3|2|-1\n3|4|-1\n");
        let dep = Deployment::empty(g.len());
        let id = |a| g.id_of(a).unwrap();
        let sc = Scenario { destination: id(1), attacker: Some(id(2)), deployment: &dep };
        let out = compute_outcome(&g, &sc, PolicyModel::SecurityThird.into()).unwrap();
        // 3: customer route of length 1 to d, length 2 to m -> legit.
        assert_eq!(out.route(id(3)).leads_to, LeadsTo::Destination);
        assert_eq!(out.route(id(4)).length, 2);
        assert_eq!(out.canonical_path(id(4)), vec![id(4), id(3), id(1)]);
    }

    #[test]
    fn peer_routes_are_not_reexported_to_peers() {
        // 1 -- 2 -- 3 peer chain; 1 is d.
        let g = graph("1|2|0\n2|3|0\n");
        let dep = Deployment::empty(g.len());
        let id = |a| g.id_of(a).unwrap();
        let sc = Scenario { destination: id(1), attacker: None, deployment: &dep };
        let out = compute_outcome(&g, &sc, PolicyModel::SecurityThird.into()).unwrap();
        assert_eq!(out.route(id(2)).rel, Some(Relationship::Peer));
        assert!(!out.route(id(3)).is_reachable());
    }

    #[test]
    fn security_ranking_differs_by_model() {
        // d=1. 2 has a customer route via 3 (insecure, 3 not deployed) and a
        // secure provider route via 4.
        let g = graph("2|3|-1\n3|1|-1\n4|2|-1\n4|1|-1\n");
        let id = |a| g.id_of(a).unwrap();
        let dep = Deployment::from_secure(g.len(), [id(1), id(2), id(4)]);
        let sc = Scenario { destination: id(1), attacker: None, deployment: &dep };
        let first = compute_outcome(&g, &sc, PolicyModel::SecurityFirst.into()).unwrap();
        assert_eq!(first.route(id(2)).next_hops.as_slice(), &[id(4)]);
        assert!(first.route(id(2)).secure);
        assert_eq!(first.route(id(2)).stage, Some(Stage::SecureProvider));
        let second = compute_outcome(&g, &sc, PolicyModel::SecuritySecond.into()).unwrap();
        assert_eq!(second.route(id(2)).next_hops.as_slice(), &[id(3)]);
        assert_eq!(second.route(id(2)).stage, Some(Stage::Customer));
    }

    #[test]
    fn simplex_stub_destination_is_signed() {
        let g = graph("2|1|-1\n3|2|-1\n");
        let id = |a| g.id_of(a).unwrap();
        let mut dep = Deployment::from_secure(g.len(), [id(2), id(3)]);
        dep.set_simplex(id(1), true);
        let sc = Scenario { destination: id(1), attacker: None, deployment: &dep };
        let out = compute_outcome(&g, &sc, PolicyModel::SecurityThird.into()).unwrap();
        assert!(out.route(id(3)).secure);
        // As a source it validates nothing.
        let sc = Scenario { destination: id(3), attacker: None, deployment: &dep };
        let out = compute_outcome(&g, &sc, PolicyModel::SecurityThird.into()).unwrap();
        assert!(!out.route(id(1)).secure);
        assert!(out.route(id(2)).secure);
    }

    #[test]
    fn scenario_validation() {
        let g = graph("2|1|-1\n");
        let id = |a| g.id_of(a).unwrap();
        let dep = Deployment::empty(g.len());
        let bad = Scenario { destination: id(1), attacker: Some(id(1)), deployment: &dep };
        assert_eq!(bad.validate(&g), Err(ScenarioError::AttackerIsDestination));
        let mut dep2 = Deployment::empty(g.len());
        dep2.set_simplex(id(2), true);
        let bad = Scenario { destination: id(1), attacker: None, deployment: &dep2 };
        assert_eq!(bad.validate(&g), Err(ScenarioError::SimplexTransit(id(2))));
        let short = Deployment::empty(1);
        let bad = Scenario { destination: id(1), attacker: None, deployment: &short };
        assert!(matches!(bad.validate(&g), Err(ScenarioError::SizeMismatch { .. })));
    }
}
