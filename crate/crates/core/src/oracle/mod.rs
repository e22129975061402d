//! Brute-force references for small graphs.
//!
//! Everything here works on explicit paths and re-derives route preference from
//! the ranking rules, sharing no code with the fixing algorithm in
//! [`crate::routing`]. Sizes are capped; the functions are meant for tests.

mod gadget;
mod random;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::partitions::Label;
use crate::routing::{Deployment, LeadsTo, LocalPref, Policy, PolicyModel, RoutingOutcome, Scenario};
use crate::topology::{AsGraph, AsId, Relationship};

pub use gadget::{set_cover_gadget, SetCoverGadget};
pub use random::{random_deployment, random_hierarchy, RandomGraphParams};

pub const MAX_FIXED_POINT_SIZE: usize = 16;
pub const MAX_ENUMERATION_SIZE: usize = 12;
pub const MAX_K_SECURITY_SIZE: usize = 14;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph has {size} ASes, oracle limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("best response did not converge")]
    NoConvergence,
    #[error(transparent)]
    Scenario(#[from] crate::routing::ScenarioError),
}

/// Lexicographic rank of a route; smaller is preferred.
pub type Rank = [u32; 5];

/// Ranking from the preference steps of a policy, spelled out step by step.
pub fn policy_rank(policy: Policy, rel: Relationship, len: u32, secure: bool) -> Rank {
    let is_peer = u32::from(rel == Relationship::Peer);
    let lp: [u32; 3] = match (policy.local_pref, rel) {
        (_, Relationship::Provider) => [2, 0, 0],
        (LocalPref::Standard, _) => [is_peer, 0, 0],
        (LocalPref::LengthClasses(k), _) if len <= k => [0, len, is_peer],
        (LocalPref::LengthClasses(_), _) => [1, is_peer, 0],
    };
    let sec = u32::from(!secure);
    match policy.model {
        PolicyModel::SecurityFirst => [sec, lp[0], lp[1], lp[2], len],
        PolicyModel::SecuritySecond => [lp[0], lp[1], lp[2], sec, len],
        PolicyModel::SecurityThird => [lp[0], lp[1], lp[2], len, sec],
        PolicyModel::InsecureOnly => [lp[0], lp[1], lp[2], len, 0],
    }
}

/// Per-AS route ranking: `(selecting AS, relationship of next hop, length, secure)`.
pub type Prefs<'a> = dyn Fn(AsId, Relationship, u32, bool) -> Rank + 'a;

/// Same policy at every AS.
pub fn uniform(policy: Policy) -> impl Fn(AsId, Relationship, u32, bool) -> Rank {
    move |_, rel, len, sec| policy_rank(policy, rel, len, sec)
}

/// Strict per-AS preference among equally ranked routes: an optional favorite
/// neighbor first, then ascending neighbor id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tiebreak {
    favorite: Vec<Option<AsId>>,
}

impl Tiebreak {
    pub fn lowest_id() -> Self {
        Tiebreak::default()
    }

    pub fn with_favorites(favorites: impl IntoIterator<Item = (AsId, AsId)>, n: usize) -> Self {
        let mut favorite = vec![None; n];
        for (v, u) in favorites {
            favorite[v.index()] = Some(u);
        }
        Tiebreak { favorite }
    }

    fn rank(&self, v: AsId, u: AsId) -> u64 {
        match self.favorite.get(v.index()) {
            Some(Some(f)) if *f == u => 0,
            _ => 1 + u64::from(u.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// Repeated passes in id order; repeated states are reported as non-convergence.
    Sweep,
    /// One randomly chosen unstable AS at a time.
    Random(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StableState {
    /// Route of every AS, from itself to the destination; attacked routes end `.., m, d`.
    pub paths: Vec<Option<Vec<AsId>>>,
}

/// What one route offer looks like to the receiving AS.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Offer {
    pub from: AsId,
    pub rel: Relationship,
    pub len: u32,
    pub secure: bool,
    pub rank: Rank,
}

fn offers(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    prefs: &Prefs<'_>,
    paths: &[Option<Vec<AsId>>],
    v: AsId,
) -> Vec<Offer> {
    let mut out = Vec::new();
    for &(u, rel) in graph.neighbors(v) {
        let Some(pu) = &paths[u.index()] else { continue };
        if pu.contains(&v) {
            continue;
        }
        let announces_everywhere = u == scenario.destination
            || Some(u) == scenario.attacker
            || graph.relationship(u, pu[1]) == Some(Relationship::Customer);
        // v hears u's route if u announces it widely or v is u's customer.
        if !announces_everywhere && rel != Relationship::Provider {
            continue;
        }
        let len = pu.len() as u32;
        let secure = scenario.deployment.is_secure(v) && signed(scenario, pu);
        out.push(Offer { from: u, rel, len, secure, rank: prefs(v, rel, len, secure) });
    }
    out
}

fn signed(scenario: &Scenario<'_>, path: &[AsId]) -> bool {
    let (last, rest) = path.split_last().expect("non-empty path");
    !rest.iter().any(|&x| Some(x) == scenario.attacker)
        && scenario.deployment.signs_origin(*last)
        && rest.iter().all(|&x| scenario.deployment.is_secure(x))
}

fn best(graph: &AsGraph, scenario: &Scenario<'_>, prefs: &Prefs<'_>, tb: &Tiebreak, paths: &[Option<Vec<AsId>>], v: AsId) -> Option<Vec<AsId>> {
    let chosen = offers(graph, scenario, prefs, paths, v)
        .into_iter()
        .min_by_key(|o| (o.rank, tb.rank(v, o.from)))?;
    let mut p = vec![v];
    p.extend_from_slice(paths[chosen.from.index()].as_ref().unwrap());
    Some(p)
}

/// Runs best-response dynamics from empty routing tables to a stable state.
pub fn best_response_fixed_point(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    prefs: &Prefs<'_>,
    tb: &Tiebreak,
    activation: Activation,
) -> Result<StableState, OracleError> {
    let n = graph.len();
    if n > MAX_FIXED_POINT_SIZE {
        return Err(OracleError::TooLarge { size: n, limit: MAX_FIXED_POINT_SIZE });
    }
    scenario.validate(graph)?;
    let d = scenario.destination;
    let mut paths: Vec<Option<Vec<AsId>>> = vec![None; n];
    paths[d.index()] = Some(vec![d]);
    if let Some(m) = scenario.attacker {
        paths[m.index()] = Some(vec![m, d]);
    }
    let movable: Vec<AsId> = graph.ids().filter(|&v| v != d && Some(v) != scenario.attacker).collect();
    let cap = 10 * n.max(1);
    match activation {
        Activation::Sweep => {
            let mut seen = HashSet::new();
            for _ in 0..cap {
                let mut changed = false;
                for &v in &movable {
                    let b = best(graph, scenario, prefs, tb, &paths, v);
                    if b != paths[v.index()] {
                        paths[v.index()] = b;
                        changed = true;
                    }
                }
                if !changed {
                    return Ok(StableState { paths });
                }
                if !seen.insert(paths.clone()) {
                    break;
                }
            }
            Err(OracleError::NoConvergence)
        }
        Activation::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..cap * n.max(1) {
                let unstable: Vec<(AsId, Option<Vec<AsId>>)> = movable
                    .iter()
                    .filter_map(|&v| {
                        let b = best(graph, scenario, prefs, tb, &paths, v);
                        (b != paths[v.index()]).then_some((v, b))
                    })
                    .collect();
                if unstable.is_empty() {
                    return Ok(StableState { paths });
                }
                let (v, b) = unstable[rng.gen_range(0..unstable.len())].clone();
                paths[v.index()] = b;
            }
            Err(OracleError::NoConvergence)
        }
    }
}

/// Per-AS view of a stable state: attributes, tie set and reachable endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleRoute {
    pub path: Option<Vec<AsId>>,
    pub rel: Option<Relationship>,
    pub len: u32,
    pub secure: bool,
    /// Neighbors whose offers rank equal to the chosen one, ascending.
    pub ties: Vec<AsId>,
    pub leads_to: LeadsTo,
}

impl StableState {
    pub fn describe(&self, graph: &AsGraph, scenario: &Scenario<'_>, prefs: &Prefs<'_>) -> Vec<OracleRoute> {
        let n = graph.len();
        let d = scenario.destination;
        let mut out: Vec<OracleRoute> = graph
            .ids()
            .map(|v| {
                let path = self.paths[v.index()].clone();
                if v == d || Some(v) == scenario.attacker || path.is_none() {
                    let secure = v == d && scenario.deployment.signs_origin(d);
                    let len = u32::from(Some(v) == scenario.attacker);
                    return OracleRoute { path, rel: None, len, secure, ties: vec![], leads_to: LeadsTo::Unreachable };
                }
                let offers = offers(graph, scenario, prefs, &self.paths, v);
                let top = offers.iter().map(|o| o.rank).min().expect("routed AS has offers");
                let mut ties: Vec<AsId> = offers.iter().filter(|o| o.rank == top).map(|o| o.from).collect();
                ties.sort_unstable();
                let chosen = offers.iter().find(|o| Some(o.from) == path.as_ref().map(|p| p[1])).unwrap();
                OracleRoute { rel: Some(chosen.rel), len: chosen.len, secure: chosen.secure, ties, leads_to: LeadsTo::Unreachable, path }
            })
            .collect();
        // Endpoints reachable by any choice within tie sets, iterated to a fixed point.
        let mut ends = vec![LeadsTo::Unreachable; n];
        ends[d.index()] = LeadsTo::Destination;
        if let Some(m) = scenario.attacker {
            ends[m.index()] = LeadsTo::Attacker;
        }
        loop {
            let mut changed = false;
            for v in graph.ids() {
                let u = out[v.index()].ties.iter().fold(ends[v.index()], |acc, t| acc.union(ends[t.index()]));
                if u != ends[v.index()] {
                    ends[v.index()] = u;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (r, e) in out.iter_mut().zip(ends) {
            r.leads_to = e;
        }
        out
    }
}

/// Compares an engine outcome with the oracle's stable state (lowest-id tiebreak)
/// AS by AS: attributes, tie sets, reachable endpoints and the canonical path.
pub fn check_engine_against_oracle(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    policy: Policy,
    outcome: &RoutingOutcome,
) -> Result<(), String> {
    let prefs = uniform(policy);
    let state = best_response_fixed_point(graph, scenario, &prefs, &Tiebreak::lowest_id(), Activation::Sweep)
        .map_err(|e| e.to_string())?;
    let oracle = state.describe(graph, scenario, &prefs);
    for v in graph.ids() {
        if v == scenario.destination || Some(v) == scenario.attacker {
            continue;
        }
        let (e, o) = (outcome.route(v), &oracle[v.index()]);
        let got = (e.rel, e.is_reachable().then_some(e.length), e.is_reachable() && e.secure, e.next_hops.to_vec(), e.leads_to);
        let secure = o.secure && policy.model != PolicyModel::InsecureOnly;
        let want = (o.rel, o.path.as_ref().map(|_| o.len), secure, o.ties.clone(), o.leads_to);
        if got != want {
            return Err(format!("{v}: engine {got:?} vs oracle {want:?}"));
        }
        let path = o.path.clone().unwrap_or_default();
        let canon = outcome.canonical_path(v);
        // The oracle spells out the fake last hop of an attacked route.
        let canon_full: Vec<AsId> = if outcome.attacker.is_some() && canon.last() == outcome.attacker.as_ref() {
            canon.into_iter().chain(std::iter::once(scenario.destination)).collect()
        } else {
            canon
        };
        if canon_full != path {
            return Err(format!("{v}: engine path {canon_full:?} vs oracle {path:?}"));
        }
    }
    Ok(())
}

/// Labels every AS by exhaustive search over deployments (all subsets of ASes
/// other than the attacker, whose own deployment cannot matter) and over all
/// tie resolutions of each resulting stable state.
pub fn enumerate_deployments(
    graph: &AsGraph,
    attacker: AsId,
    destination: AsId,
    policy: Policy,
) -> Result<Vec<Label>, OracleError> {
    let n = graph.len();
    if n > MAX_ENUMERATION_SIZE {
        return Err(OracleError::TooLarge { size: n, limit: MAX_ENUMERATION_SIZE });
    }
    let prefs = uniform(policy);
    let mut can_happy = vec![false; n];
    let mut can_unhappy = vec![false; n];
    let others: Vec<AsId> = graph.ids().filter(|&v| v != attacker).collect();
    for mask in 0u32..(1 << others.len()) {
        let dep = Deployment::from_secure(n, others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v));
        let sc = Scenario { destination, attacker: Some(attacker), deployment: &dep };
        let state = best_response_fixed_point(graph, &sc, &prefs, &Tiebreak::lowest_id(), Activation::Sweep)?;
        for (v, r) in graph.ids().zip(state.describe(graph, &sc, &prefs)) {
            can_happy[v.index()] |= r.leads_to.may_reach_destination();
            can_unhappy[v.index()] |= r.leads_to.may_reach_attacker();
        }
    }
    Ok(graph
        .ids()
        .map(|v| match (can_happy[v.index()], can_unhappy[v.index()]) {
            _ if v == attacker || v == destination => Label::Unreachable,
            (true, false) => Label::Immune,
            (false, true) => Label::Doomed,
            (true, true) => Label::Protectable,
            (false, false) => Label::Unreachable,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxKResult {
    /// Best deployment found (lexicographically smallest among optima).
    pub secure: Vec<AsId>,
    /// Happy sources, excluding the destination and the attacker.
    pub happy_sources: usize,
}

impl MaxKResult {
    /// Count that also treats the destination as happy.
    pub fn happy_with_destination(&self) -> usize {
        self.happy_sources + 1
    }
}

/// Max-k-Security by exhaustion: the deployment of at most `k` ASes that
/// maximizes sources routing to the destination under the given tiebreak.
pub fn max_k_security_bruteforce(
    graph: &AsGraph,
    attacker: AsId,
    destination: AsId,
    k: usize,
    policy: Policy,
    tb: &Tiebreak,
) -> Result<MaxKResult, OracleError> {
    let n = graph.len();
    if n > MAX_K_SECURITY_SIZE {
        return Err(OracleError::TooLarge { size: n, limit: MAX_K_SECURITY_SIZE });
    }
    let prefs = uniform(policy);
    let others: Vec<AsId> = graph.ids().filter(|&v| v != attacker).collect();
    let mut best: Option<MaxKResult> = None;
    for mask in 0u32..(1 << others.len()) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let secure: Vec<AsId> = others.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
        let dep = Deployment::from_secure(n, secure.iter().copied());
        let sc = Scenario { destination, attacker: Some(attacker), deployment: &dep };
        let state = best_response_fixed_point(graph, &sc, &prefs, tb, Activation::Sweep)?;
        let happy = graph
            .ids()
            .filter(|&v| v != attacker && v != destination)
            .filter(|&v| state.paths[v.index()].as_ref().is_some_and(|p| !p.contains(&attacker)))
            .count();
        let better = match &best {
            None => true,
            Some(b) => happy > b.happy_sources || (happy == b.happy_sources && secure < b.secure),
        };
        if better {
            best = Some(MaxKResult { secure, happy_sources: happy });
        }
    }
    Ok(best.expect("the empty deployment is always considered"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_relationships;

    #[test]
    fn rank_orders_follow_the_step_lists() {
        let p = |m| Policy::new(m);
        let c = Relationship::Customer;
        let pr = Relationship::Provider;
        // Secure long provider route vs insecure short customer route.
        let sec_prov = |m| policy_rank(p(m), pr, 5, true);
        let ins_cust = |m| policy_rank(p(m), c, 1, false);
        assert!(sec_prov(PolicyModel::SecurityFirst) < ins_cust(PolicyModel::SecurityFirst));
        assert!(sec_prov(PolicyModel::SecuritySecond) > ins_cust(PolicyModel::SecuritySecond));
        // Same class: second prefers secure over short, third prefers short.
        let long_sec = |m| policy_rank(p(m), c, 4, true);
        let short_ins = |m| policy_rank(p(m), c, 2, false);
        assert!(long_sec(PolicyModel::SecuritySecond) < short_ins(PolicyModel::SecuritySecond));
        assert!(long_sec(PolicyModel::SecurityThird) > short_ins(PolicyModel::SecurityThird));
    }

    #[test]
    fn random_and_sweep_activation_agree() {
        let g = parse_relationships("3|1|-1\n3|2|-1\n4|3|-1\n5|3|-1\n4|5|0\n6|4|-1\n6|5|-1\n".as_bytes()).unwrap();
        let id = |a| g.id_of(a).unwrap();
        let dep = Deployment::from_secure(g.len(), [id(1), id(3), id(4)]);
        let sc = Scenario { destination: id(1), attacker: Some(id(2)), deployment: &dep };
        let prefs = uniform(PolicyModel::SecuritySecond.into());
        let tb = Tiebreak::lowest_id();
        let a = best_response_fixed_point(&g, &sc, &prefs, &tb, Activation::Sweep).unwrap();
        for seed in 0..20 {
            assert_eq!(best_response_fixed_point(&g, &sc, &prefs, &tb, Activation::Random(seed)).unwrap(), a);
        }
    }

    #[test]
    fn size_caps() {
        let mut text = String::new();
        for i in 2..=20 {
            text += &format!("1|{i}|-1\n");
        }
        let g = parse_relationships(text.as_bytes()).unwrap();
        let dep = Deployment::empty(g.len());
        let sc = Scenario { destination: AsId(1), attacker: None, deployment: &dep };
        let prefs = uniform(PolicyModel::SecurityThird.into());
        assert!(matches!(
            best_response_fixed_point(&g, &sc, &prefs, &Tiebreak::lowest_id(), Activation::Sweep),
            Err(OracleError::TooLarge { .. })
        ));
        assert!(enumerate_deployments(&g, AsId(1), AsId(2), PolicyModel::SecurityThird.into()).is_err());
    }
}
