//! Immune / protectable / doomed classification of sources for one (attacker,
//! destination) pair, computed from the routing outcome with nothing deployed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::routing::{compute_outcome, Deployment, LeadsTo, Policy, PolicyModel, RoutingOutcome, Scenario, ScenarioError};
use crate::topology::{AsGraph, AsId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// Routes to the destination whatever is deployed.
    Immune,
    /// Outcome depends on the deployment.
    Protectable,
    /// Never routes to the destination.
    Doomed,
    /// No route at all, or the pair's own attacker/destination.
    Unreachable,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub immune: u64,
    pub protectable: u64,
    pub doomed: u64,
    pub unreachable: u64,
    /// Sources routing to the destination under every tiebreak with nothing deployed.
    pub baseline_happy_lower: u64,
    pub baseline_happy_upper: u64,
}

impl PartitionCounts {
    /// Sources that count toward the fractions.
    pub fn classified(&self) -> u64 {
        self.immune + self.protectable + self.doomed
    }

    pub fn merge(&mut self, o: &PartitionCounts) {
        self.immune += o.immune;
        self.protectable += o.protectable;
        self.doomed += o.doomed;
        self.unreachable += o.unreachable;
        self.baseline_happy_lower += o.baseline_happy_lower;
        self.baseline_happy_upper += o.baseline_happy_upper;
    }

    fn frac(&self, x: u64) -> f64 {
        match self.classified() {
            0 => 0.0,
            c => x as f64 / c as f64,
        }
    }

    pub fn immune_frac(&self) -> f64 {
        self.frac(self.immune)
    }

    pub fn protectable_frac(&self) -> f64 {
        self.frac(self.protectable)
    }

    pub fn doomed_frac(&self) -> f64 {
        self.frac(self.doomed)
    }

    pub fn baseline_happy_lower_frac(&self) -> f64 {
        self.frac(self.baseline_happy_lower)
    }

    pub fn baseline_happy_upper_frac(&self) -> f64 {
        self.frac(self.baseline_happy_upper)
    }
}

#[derive(Clone, Debug)]
pub struct PartitionResult {
    pub attacker: AsId,
    pub destination: AsId,
    pub labels: Vec<Label>,
    /// Routing with nothing deployed, as used for the labels.
    pub baseline: RoutingOutcome,
}

impl PartitionResult {
    pub fn counts(&self) -> PartitionCounts {
        let mut c = PartitionCounts::default();
        for (i, &l) in self.labels.iter().enumerate() {
            let v = AsId(i as u32);
            if v == self.attacker || v == self.destination {
                continue;
            }
            match l {
                Label::Immune => c.immune += 1,
                Label::Protectable => c.protectable += 1,
                Label::Doomed => c.doomed += 1,
                Label::Unreachable => c.unreachable += 1,
            }
            let lt = self.baseline.route(v).leads_to;
            c.baseline_happy_lower += u64::from(lt == LeadsTo::Destination);
            c.baseline_happy_upper += u64::from(lt.may_reach_destination());
        }
        c
    }
}

/// Classifies every source for the pair `(attacker, destination)`.
///
/// Security 3rd labels come from where the tied baseline routes lead. Security
/// 2nd follows every route of the baseline relationship class, through next
/// hops that keep their own baseline class, then settles sources that see
/// both endpoints by comparing route lengths. Security 1st marks everything
/// protectable unless `exact` is set, in which case sources with no legitimate
/// route are doomed and sources that always have a route but can never hear
/// an attacked one are immune.
pub fn partition(
    graph: &AsGraph,
    attacker: AsId,
    destination: AsId,
    policy: Policy,
    exact: bool,
) -> Result<PartitionResult, ScenarioError> {
    let empty = Deployment::empty(graph.len());
    let sc = Scenario { destination, attacker: Some(attacker), deployment: &empty };
    let baseline = compute_outcome(graph, &sc, policy)?;
    let reach: Vec<LeadsTo> = match policy.model {
        PolicyModel::SecurityThird | PolicyModel::InsecureOnly => {
            baseline.routes.iter().map(|r| r.leads_to).collect()
        }
        PolicyModel::SecuritySecond => class_consistent_endpoints(graph, &baseline),
        PolicyModel::SecurityFirst => {
            let base: Vec<LeadsTo> = baseline.routes.iter().map(|r| r.leads_to).collect();
            if exact {
                first_exact(graph, attacker, destination, &base)
            } else {
                base.into_iter().map(|l| if l == LeadsTo::Unreachable { l } else { LeadsTo::Mixed }).collect()
            }
        }
    };
    let labels = graph
        .ids()
        .map(|v| match reach[v.index()] {
            _ if v == attacker || v == destination => Label::Unreachable,
            LeadsTo::Destination => Label::Immune,
            LeadsTo::Attacker => Label::Doomed,
            LeadsTo::Mixed => Label::Protectable,
            LeadsTo::Unreachable => Label::Unreachable,
        })
        .collect();
    Ok(PartitionResult { attacker, destination, labels, baseline })
}

// Endpoints over all routes whose every hop keeps the relationship class it has
// in the baseline; under security 2nd no deployment changes these classes.
// A source whose chains reach both ends is still immune when an always-legit
// candidate's longest chain is shorter than the shortest attacked chain of
// every other candidate: attacked routes are never secure, so an insecure
// source takes the shorter one and a secure source with a secure offer is
// happy anyway.
fn class_consistent_endpoints(graph: &AsGraph, baseline: &RoutingOutcome) -> Vec<LeadsTo> {
    const INF: u32 = u32::MAX;
    let n = graph.len();
    let d = baseline.destination;
    let mut ends = vec![LeadsTo::Unreachable; n];
    ends[d.index()] = LeadsTo::Destination;
    if let Some(m) = baseline.attacker {
        ends[m.index()] = LeadsTo::Attacker;
    }
    // Candidate next hops of v: neighbors announcing to v with v's baseline class.
    let cands: Vec<Vec<AsId>> = graph
        .ids()
        .map(|v| {
            let want = baseline.route(v).rel;
            if want.is_none() {
                return Vec::new();
            }
            graph
                .neighbors(v)
                .iter()
                .filter(|&&(u, role_of_u)| want == Some(role_of_u) && baseline.route(u).exported_to(role_of_u.reverse()))
                .map(|&(u, _)| u)
                .collect()
        })
        .collect();
    let mut dependents: Vec<Vec<AsId>> = vec![Vec::new(); n];
    for v in graph.ids() {
        for &u in &cands[v.index()] {
            dependents[u.index()].push(v);
        }
    }
    let mut stack: Vec<AsId> = baseline.order.iter().copied().filter(|v| baseline.route(*v).rel.is_none()).collect();
    while let Some(u) = stack.pop() {
        for &v in &dependents[u.index()] {
            let merged = ends[v.index()].union(ends[u.index()]);
            if merged != ends[v.index()] {
                ends[v.index()] = merged;
                stack.push(v);
            }
        }
    }

    // Dependencies-first order over the candidate graph; skip the refinement on cycles.
    let mut pending: Vec<usize> = cands.iter().map(|c| c.len()).collect();
    let mut topo: Vec<AsId> = graph.ids().filter(|v| pending[v.index()] == 0).collect();
    let mut i = 0;
    while i < topo.len() {
        let u = topo[i];
        i += 1;
        for &v in &dependents[u.index()] {
            pending[v.index()] -= 1;
            if pending[v.index()] == 0 {
                topo.push(v);
            }
        }
    }
    if topo.len() != n {
        return ends;
    }
    let mut short_bogus = vec![INF; n];
    let mut long_legit: Vec<Option<u32>> = vec![None; n];
    let mut immune = vec![false; n];
    for v in topo {
        let i = v.index();
        if v == d {
            long_legit[i] = Some(0);
            immune[i] = true;
            continue;
        }
        if Some(v) == baseline.attacker {
            short_bogus[i] = 1;
            continue;
        }
        let c = &cands[i];
        short_bogus[i] = c.iter().map(|u| short_bogus[u.index()].saturating_add(1)).min().unwrap_or(INF);
        // A direct route from the destination is secure whenever any of this
        // class is, so it is always the one taken.
        long_legit[i] = if c.contains(&d) {
            Some(1)
        } else {
            c.iter().filter_map(|u| long_legit[u.index()]).max().map(|l| l + 1)
        };
        // Shortest offer from a candidate that might route to the attacker.
        let risky = c.iter().filter(|u| !immune[u.index()]).map(|u| short_bogus[u.index()]).min();
        let safe = c.iter().filter(|u| immune[u.index()]).filter_map(|u| long_legit[u.index()]).min();
        immune[i] = !c.is_empty()
            && match (risky, safe) {
                (None, _) => true,
                (Some(r), Some(s)) => s < r,
                (Some(_), None) => false,
            };
        if immune[i] {
            ends[i] = LeadsTo::Destination;
        }
    }
    ends
}

fn first_exact(graph: &AsGraph, attacker: AsId, destination: AsId, base: &[LeadsTo]) -> Vec<LeadsTo> {
    let legit = perceivable(graph, destination, attacker);
    let attacked = perceivable(graph, attacker, destination);
    let always = always_routed(graph, destination, attacker);
    graph
        .ids()
        .map(|v| {
            let i = v.index();
            match (legit[i], attacked[i]) {
                _ if base[i] == LeadsTo::Unreachable => LeadsTo::Unreachable,
                (false, _) => LeadsTo::Attacker,
                (true, false) if always[i] => LeadsTo::Destination,
                _ => LeadsTo::Mixed,
            }
        })
        .collect()
}

/// Whether each AS has a route to `target` that respects export rules and
/// does not pass through `avoid`.
fn perceivable(graph: &AsGraph, target: AsId, avoid: AsId) -> Vec<bool> {
    let n = graph.len();
    // Customer-class routes: chains of customers down to the target.
    let mut down = vec![false; n];
    down[target.index()] = true;
    let mut stack = vec![target];
    while let Some(c) = stack.pop() {
        for p in graph.providers(c) {
            if p != avoid && p != target && !down[p.index()] {
                down[p.index()] = true;
                stack.push(p);
            }
        }
    }
    let mut any = down.clone();
    for v in graph.ids() {
        if v != avoid && graph.peers(v).any(|q| down[q.index()]) {
            any[v.index()] = true;
        }
    }
    // Anything a provider holds is announced to its customers.
    let mut stack: Vec<AsId> = graph.ids().filter(|v| any[v.index()]).collect();
    while let Some(p) = stack.pop() {
        for c in graph.customers(p) {
            if c != avoid && c != target && !any[c.index()] {
                any[c.index()] = true;
                stack.push(c);
            }
        }
    }
    any[avoid.index()] = false;
    any
}

// ASes guaranteed some route under every deployment: neighbors of the
// destination, and customers of such ASes.
fn always_routed(graph: &AsGraph, destination: AsId, attacker: AsId) -> Vec<bool> {
    let mut ok = vec![false; graph.len()];
    let mut stack: Vec<AsId> = graph.neighbors(destination).iter().map(|(v, _)| *v).filter(|&v| v != attacker).collect();
    for &v in &stack {
        ok[v.index()] = true;
    }
    while let Some(p) = stack.pop() {
        for c in graph.customers(p) {
            if c != attacker && c != destination && !ok[c.index()] {
                ok[c.index()] = true;
                stack.push(c);
            }
        }
    }
    ok
}

/// Partition counts keyed by a group name, summed over many pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionTally {
    pub groups: BTreeMap<String, PartitionCounts>,
}

impl PartitionTally {
    /// Adds one pair; `group` names the group of each counted source.
    pub fn add(&mut self, result: &PartitionResult, mut group: impl FnMut(AsId) -> String) {
        let mut per: BTreeMap<String, PartitionCounts> = BTreeMap::new();
        for (i, &l) in result.labels.iter().enumerate() {
            let v = AsId(i as u32);
            if v == result.attacker || v == result.destination {
                continue;
            }
            let c = per.entry(group(v)).or_default();
            match l {
                Label::Immune => c.immune += 1,
                Label::Protectable => c.protectable += 1,
                Label::Doomed => c.doomed += 1,
                Label::Unreachable => c.unreachable += 1,
            }
            let lt = result.baseline.route(v).leads_to;
            c.baseline_happy_lower += u64::from(lt == LeadsTo::Destination);
            c.baseline_happy_upper += u64::from(lt.may_reach_destination());
        }
        for (k, c) in per {
            self.groups.entry(k).or_default().merge(&c);
        }
    }

    pub fn merge(&mut self, other: &PartitionTally) {
        for (k, c) in &other.groups {
            self.groups.entry(k.clone()).or_default().merge(c);
        }
    }

    pub fn total(&self) -> PartitionCounts {
        let mut t = PartitionCounts::default();
        for c in self.groups.values() {
            t.merge(c);
        }
        t
    }
}

/// Sums partition counts over `pairs`, grouping sources with `group`.
pub fn partition_sweep(
    graph: &AsGraph,
    pairs: &[(AsId, AsId)],
    policy: Policy,
    exact: bool,
    mut group: impl FnMut(AsId, AsId, AsId) -> String,
) -> Result<PartitionTally, ScenarioError> {
    let mut tally = PartitionTally::default();
    for &(m, d) in pairs {
        let r = partition(graph, m, d, policy, exact)?;
        tally.add(&r, |s| group(m, d, s));
    }
    Ok(tally)
}
