use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Policy, PolicyModel, RouteKey, Scenario, ScenarioError};
use crate::topology::{AsGraph, AsId, Relationship};

/// Explicit route per AS, from the AS itself to the destination (both inclusive).
/// Attacked routes end with the attacker followed by the destination.
pub type PathState = Vec<Option<Vec<AsId>>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedOutcome {
    pub paths: PathState,
    pub converged: bool,
    pub rounds: usize,
}

/// Asynchronous best response with a per-AS policy. Each round activates every
/// AS once in a seeded random order; stops after a quiet round, a repeated
/// global state, or `10 * |V|` rounds. `initial` seeds the routes (for example
/// a previous stable state on a slightly different graph).
pub fn compute_outcome_mixed(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    policies: &[Policy],
    seed: u64,
    initial: Option<&PathState>,
) -> Result<MixedOutcome, ScenarioError> {
    scenario.validate(graph)?;
    let n = graph.len();
    if policies.len() != n {
        return Err(ScenarioError::SizeMismatch { got: policies.len(), want: n });
    }
    let d = scenario.destination;
    let mut paths: PathState = initial.cloned().unwrap_or_else(|| vec![None; n]);
    paths.resize(n, None);
    paths[d.index()] = Some(vec![d]);
    if let Some(m) = scenario.attacker {
        paths[m.index()] = Some(vec![m, d]);
    }

    let mut order: Vec<AsId> =
        graph.ids().filter(|&v| v != d && Some(v) != scenario.attacker).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<PathState> = HashSet::new();
    let cap = 10 * n.max(1);
    for round in 1..=cap {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            let next = best_response(graph, scenario, &policies[v.index()], &paths, v);
            if next != paths[v.index()] {
                paths[v.index()] = next;
                changed = true;
            }
        }
        if !changed {
            return Ok(MixedOutcome { paths, converged: true, rounds: round });
        }
        if !seen.insert(paths.clone()) {
            return Ok(MixedOutcome { paths, converged: false, rounds: round });
        }
    }
    Ok(MixedOutcome { paths, converged: false, rounds: cap })
}

fn best_response(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    policy: &Policy,
    paths: &PathState,
    v: AsId,
) -> Option<Vec<AsId>> {
    let dep = scenario.deployment;
    let validates = dep.is_secure(v) && policy.model != PolicyModel::InsecureOnly;
    let mut best: Option<(RouteKey, AsId)> = None;
    for &(u, role_of_u) in graph.neighbors(v) {
        let Some(pu) = &paths[u.index()] else { continue };
        if pu.contains(&v) {
            continue;
        }
        let origin = u == scenario.destination || Some(u) == scenario.attacker;
        let u_has_customer_route = pu.len() >= 2 && graph.relationship(u, pu[1]) == Some(Relationship::Customer);
        // The route held by u is stale if its first link is gone.
        if !origin && pu.len() >= 2 && graph.relationship(u, pu[1]).is_none() {
            continue;
        }
        if !(origin || u_has_customer_route || role_of_u == Relationship::Provider) {
            continue;
        }
        let secure = validates && path_is_signed(scenario, pu);
        let key = policy.key(role_of_u, pu.len() as u32, secure);
        if best.is_none_or(|(b, bu)| (key, u) < (b, bu)) {
            best = Some((key, u));
        }
    }
    best.map(|(_, u)| {
        let mut p = Vec::with_capacity(paths[u.index()].as_ref().map_or(1, |p| p.len() + 1));
        p.push(v);
        p.extend_from_slice(paths[u.index()].as_ref().expect("chosen neighbor has a route"));
        p
    })
}

fn path_is_signed(scenario: &Scenario<'_>, path: &[AsId]) -> bool {
    let dep = scenario.deployment;
    let (last, rest) = path.split_last().expect("non-empty path");
    if rest.iter().any(|&x| Some(x) == scenario.attacker) {
        return false;
    }
    dep.signs_origin(*last) && rest.iter().all(|&x| dep.is_secure(x))
}

/// Collects the distinct stable states reached from `trials` seeded activation
/// orders, each followed by a failure and recovery of `link`.
pub fn wedgie_probe(
    graph: &AsGraph,
    scenario: &Scenario<'_>,
    policies: &[Policy],
    link: (AsId, AsId),
    trials: u64,
) -> Result<Vec<PathState>, ScenarioError> {
    let failed = graph.without_link(link.0, link.1);
    let mut states: Vec<PathState> = Vec::new();
    let mut add = |s: MixedOutcome| {
        if s.converged && !states.contains(&s.paths) {
            states.push(s.paths);
        }
    };
    for seed in 0..trials {
        let up = compute_outcome_mixed(graph, scenario, policies, seed, None)?;
        let down = compute_outcome_mixed(&failed, scenario, policies, seed, Some(&up.paths))?;
        let recovered = compute_outcome_mixed(graph, scenario, policies, seed, Some(&down.paths))?;
        add(up);
        add(recovered);
    }
    states.sort();
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::{compute_outcome, Deployment};
    use crate::topology::parse_relationships;

    #[test]
    fn homogeneous_matches_engine_paths() {
        let g = parse_relationships("2|1|-1\n3|2|-1\n4|1|-1\n3|4|0\n5|3|-1\n5|4|-1\n".as_bytes()).unwrap();
        let id = |a| g.id_of(a).unwrap();
        let dep = Deployment::from_secure(g.len(), [id(1), id(2), id(3), id(5)]);
        let sc = Scenario { destination: id(1), attacker: None, deployment: &dep };
        for model in PolicyModel::SECURE_MODELS {
            let policy = Policy::new(model);
            let engine = compute_outcome(&g, &sc, policy).unwrap();
            let mixed = compute_outcome_mixed(&g, &sc, &vec![policy; g.len()], 7, None).unwrap();
            assert!(mixed.converged);
            for v in g.ids() {
                assert_eq!(mixed.paths[v.index()].clone().unwrap_or_default(), engine.canonical_path(v));
            }
        }
    }
}
