//! Security metric, downgrade and collateral accounting, and rollout plans.
//!
//! Everything here is built from per-pair routing outcomes, and every
//! aggregate is an integer tally so that merging in any order gives the same
//! result.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::routing::{compute_outcome, Deployment, LeadsTo, Policy, RoutingOutcome, Scenario, ScenarioError};
use crate::topology::{AsGraph, AsId, Relationship, Tier};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HappyBounds {
    /// Sources routing to the destination under every tiebreak.
    pub lower: u64,
    /// Sources routing to the destination under some tiebreak.
    pub upper: u64,
    pub denominator: u64,
}

/// Counts happy sources in an attacked outcome; the attacker and the
/// destination are not sources.
pub fn happy_bounds(outcome: &RoutingOutcome) -> HappyBounds {
    let mut b = HappyBounds::default();
    for (i, r) in outcome.routes.iter().enumerate() {
        let v = AsId(i as u32);
        if v == outcome.destination || Some(v) == outcome.attacker {
            continue;
        }
        b.denominator += 1;
        b.lower += u64::from(r.leads_to == LeadsTo::Destination);
        b.upper += u64::from(r.leads_to.may_reach_destination());
    }
    b
}

/// Happy counts summed over (attacker, destination) pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricTally {
    pub pairs: u64,
    /// Sum of per-pair source counts.
    pub sources: u64,
    pub lower: u64,
    pub upper: u64,
    pub baseline_lower: u64,
    pub baseline_upper: u64,
}

impl MetricTally {
    pub fn pair(baseline: &HappyBounds, at_s: &HappyBounds) -> Self {
        debug_assert_eq!(baseline.denominator, at_s.denominator);
        MetricTally {
            pairs: 1,
            sources: at_s.denominator,
            lower: at_s.lower,
            upper: at_s.upper,
            baseline_lower: baseline.lower,
            baseline_upper: baseline.upper,
        }
    }

    pub fn merge(&mut self, o: &MetricTally) {
        self.pairs += o.pairs;
        self.sources += o.sources;
        self.lower += o.lower;
        self.upper += o.upper;
        self.baseline_lower += o.baseline_lower;
        self.baseline_upper += o.baseline_upper;
    }

    pub fn report(&self) -> MetricReport {
        // Every pair has the same |V|-2 sources, so the average of per-pair
        // fractions is the ratio of the sums.
        let f = |x: u64| if self.sources == 0 { 0.0 } else { x as f64 / self.sources as f64 };
        MetricReport {
            pairs: self.pairs,
            h_lower: f(self.lower),
            h_upper: f(self.upper),
            baseline_lower: f(self.baseline_lower),
            baseline_upper: f(self.baseline_upper),
            delta_lower: f(self.lower) - f(self.baseline_lower),
            delta_upper: f(self.upper) - f(self.baseline_upper),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pairs: u64,
    pub h_lower: f64,
    pub h_upper: f64,
    pub baseline_lower: f64,
    pub baseline_upper: f64,
    pub delta_lower: f64,
    pub delta_upper: f64,
}

fn attacked(graph: &AsGraph, m: AsId, d: AsId, dep: &Deployment, policy: Policy) -> Result<RoutingOutcome, ScenarioError> {
    compute_outcome(graph, &Scenario { destination: d, attacker: Some(m), deployment: dep }, policy)
}

/// The attacked outcome with nothing deployed, shared by every deployment
/// evaluated for the pair.
pub fn attack_baseline(graph: &AsGraph, m: AsId, d: AsId, policy: Policy) -> Result<RoutingOutcome, ScenarioError> {
    attacked(graph, m, d, &Deployment::empty(graph.len()), policy)
}

/// Metric over `pairs`; pairs with the attacker equal to the destination are skipped.
pub fn metric(
    graph: &AsGraph,
    pairs: &[(AsId, AsId)],
    deployment: &Deployment,
    policy: Policy,
) -> Result<MetricTally, ScenarioError> {
    let mut t = MetricTally::default();
    for &(m, d) in pairs.iter().filter(|(m, d)| m != d) {
        let base = attack_baseline(graph, m, d, policy)?;
        let at_s = attacked(graph, m, d, deployment, policy)?;
        t.merge(&MetricTally::pair(&happy_bounds(&base), &happy_bounds(&at_s)));
    }
    Ok(t)
}

/// What happens under attack to sources that have a secure route without one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DowngradeReport {
    /// Sources with a secure route when nobody attacks, excluding `excluded`.
    pub secure_normal: u64,
    /// Of those, sources left with an insecure route under attack.
    pub downgraded: u64,
    /// Still secure, and happy under attack even with nothing deployed.
    pub wasted: u64,
    /// Still secure, and not surely happy with nothing deployed.
    pub protected: u64,
    /// Secure sources whose route without an attack may pass through the attacker.
    pub excluded: u64,
}

impl DowngradeReport {
    pub fn merge(&mut self, o: &DowngradeReport) {
        self.secure_normal += o.secure_normal;
        self.downgraded += o.downgraded;
        self.wasted += o.wasted;
        self.protected += o.protected;
        self.excluded += o.excluded;
    }
}

/// Downgrade accounting from three outcomes of one pair: no attack at S,
/// attack at S, and attack with nothing deployed.
pub fn downgrades_from(normal: &RoutingOutcome, at_s: &RoutingOutcome, baseline: &RoutingOutcome) -> DowngradeReport {
    let m = at_s.attacker.expect("attacked outcome");
    let d = at_s.destination;
    let via_m = normal.traversal(m);
    let mut r = DowngradeReport::default();
    for (i, route) in normal.routes.iter().enumerate() {
        let v = AsId(i as u32);
        if v == m || v == d || !route.secure {
            continue;
        }
        if via_m[i].may_reach_attacker() {
            r.excluded += 1;
            continue;
        }
        r.secure_normal += 1;
        if !at_s.route(v).secure {
            r.downgraded += 1;
        } else if baseline.route(v).leads_to == LeadsTo::Destination {
            r.wasted += 1;
        } else {
            r.protected += 1;
        }
    }
    r
}

pub fn downgrade_report(
    graph: &AsGraph,
    m: AsId,
    d: AsId,
    deployment: &Deployment,
    policy: Policy,
) -> Result<DowngradeReport, ScenarioError> {
    let normal = compute_outcome(graph, &Scenario { destination: d, attacker: None, deployment }, policy)?;
    let at_s = attacked(graph, m, d, deployment, policy)?;
    let base = attack_baseline(graph, m, d, policy)?;
    Ok(downgrades_from(&normal, &at_s, &base))
}

/// Happiness of one source in one outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Fate {
    Happy,
    /// Depends on tiebreaks.
    Mixed,
    /// Routes to the attacker or has no route.
    Unhappy,
}

impl Fate {
    pub fn of(leads_to: LeadsTo) -> Fate {
        match leads_to {
            LeadsTo::Destination => Fate::Happy,
            LeadsTo::Mixed => Fate::Mixed,
            LeadsTo::Attacker | LeadsTo::Unreachable => Fate::Unhappy,
        }
    }

    fn idx(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeKind {
    Benefit,
    Damage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollateralChange {
    pub source: AsId,
    pub kind: ChangeKind,
    pub before: Fate,
    pub after: Fate,
    /// Both ends are tiebreak-independent.
    pub determinate: bool,
}

/// Fate transitions between nothing deployed and S.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollateralCounts {
    /// `transitions[before][after]` over sources whose route at S is insecure.
    pub transitions: [[u64; 3]; 3],
    /// Sources with a secure route at S.
    pub secure_at_s: u64,
    /// Sources with a secure route at S that were not surely happy before.
    pub newly_protected: u64,
}

impl CollateralCounts {
    fn t(&self, a: Fate, b: Fate) -> u64 {
        self.transitions[a.idx()][b.idx()]
    }

    pub fn benefits_lower(&self) -> u64 {
        self.t(Fate::Unhappy, Fate::Happy)
    }

    pub fn benefits_upper(&self) -> u64 {
        self.benefits_lower() + self.t(Fate::Unhappy, Fate::Mixed) + self.t(Fate::Mixed, Fate::Happy)
    }

    pub fn damages_lower(&self) -> u64 {
        self.t(Fate::Happy, Fate::Unhappy)
    }

    pub fn damages_upper(&self) -> u64 {
        self.damages_lower() + self.t(Fate::Happy, Fate::Mixed) + self.t(Fate::Mixed, Fate::Unhappy)
    }

    pub fn merge(&mut self, o: &CollateralCounts) {
        for a in 0..3 {
            for b in 0..3 {
                self.transitions[a][b] += o.transitions[a][b];
            }
        }
        self.secure_at_s += o.secure_at_s;
        self.newly_protected += o.newly_protected;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CollateralReport {
    pub changes: Vec<CollateralChange>,
    pub counts: CollateralCounts,
}

impl CollateralReport {
    pub fn benefits(&self) -> impl Iterator<Item = AsId> + '_ {
        self.changes.iter().filter(|c| c.kind == ChangeKind::Benefit).map(|c| c.source)
    }

    pub fn damages(&self) -> impl Iterator<Item = AsId> + '_ {
        self.changes.iter().filter(|c| c.kind == ChangeKind::Damage).map(|c| c.source)
    }
}

/// Compares each source's fate with nothing deployed against its fate at S.
/// Sources with a secure route at S count as protected, not as collateral.
pub fn collateral_from(baseline: &RoutingOutcome, at_s: &RoutingOutcome) -> CollateralReport {
    let mut rep = CollateralReport::default();
    for (i, r) in at_s.routes.iter().enumerate() {
        let v = AsId(i as u32);
        if v == at_s.destination || Some(v) == at_s.attacker {
            continue;
        }
        let before = Fate::of(baseline.routes[i].leads_to);
        if r.secure {
            rep.counts.secure_at_s += 1;
            rep.counts.newly_protected += u64::from(before != Fate::Happy);
            continue;
        }
        let after = Fate::of(r.leads_to);
        rep.counts.transitions[before.idx()][after.idx()] += 1;
        let kind = match (before, after) {
            (Fate::Unhappy, Fate::Happy | Fate::Mixed) | (Fate::Mixed, Fate::Happy) => ChangeKind::Benefit,
            (Fate::Happy, Fate::Unhappy | Fate::Mixed) | (Fate::Mixed, Fate::Unhappy) => ChangeKind::Damage,
            _ => continue,
        };
        let determinate = before != Fate::Mixed && after != Fate::Mixed;
        rep.changes.push(CollateralChange { source: v, kind, before, after, determinate });
    }
    rep
}

pub fn collateral_report(
    graph: &AsGraph,
    m: AsId,
    d: AsId,
    deployment: &Deployment,
    policy: Policy,
) -> Result<CollateralReport, ScenarioError> {
    let base = attack_baseline(graph, m, d, policy)?;
    let at_s = attacked(graph, m, d, deployment, policy)?;
    Ok(collateral_from(&base, &at_s))
}

/// Downgrade, collateral and metric tallies for one deployment, summed over pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCause {
    pub metric: MetricTally,
    pub downgrades: DowngradeReport,
    pub collateral: CollateralCounts,
}

impl RootCause {
    pub fn pair(normal: &RoutingOutcome, at_s: &RoutingOutcome, baseline: &RoutingOutcome) -> Self {
        RootCause {
            metric: MetricTally::pair(&happy_bounds(baseline), &happy_bounds(at_s)),
            downgrades: downgrades_from(normal, at_s, baseline),
            collateral: collateral_from(baseline, at_s).counts,
        }
    }

    pub fn merge(&mut self, o: &RootCause) {
        self.metric.merge(&o.metric);
        self.downgrades.merge(&o.downgrades);
        self.collateral.merge(&o.collateral);
    }

    /// Bounds on the change in surely-happy sources implied by the
    /// components, as `(low, high)` in source counts.
    pub fn delta_bounds(&self) -> (i64, i64) {
        let c = &self.collateral;
        let np = c.newly_protected as i64;
        (
            np + c.benefits_lower() as i64 - c.damages_upper() as i64,
            np + c.benefits_upper() as i64 - c.damages_lower() as i64,
        )
    }

    /// Observed change in surely-happy sources.
    pub fn delta_lower_count(&self) -> i64 {
        self.metric.lower as i64 - self.metric.baseline_lower as i64
    }

    pub fn reconstruction_holds(&self) -> bool {
        let (lo, hi) = self.delta_bounds();
        (lo..=hi).contains(&self.delta_lower_count())
    }

    /// Fractions of (pair, source) triples.
    pub fn fractions(&self) -> RootCauseFractions {
        let f = |x: u64| if self.metric.sources == 0 { 0.0 } else { x as f64 / self.metric.sources as f64 };
        let d = &self.downgrades;
        let c = &self.collateral;
        RootCauseFractions {
            secure_normal: f(d.secure_normal),
            downgraded: f(d.downgraded),
            wasted: f(d.wasted),
            protected: f(d.protected),
            newly_protected: f(c.newly_protected),
            benefits_lower: f(c.benefits_lower()),
            benefits_upper: f(c.benefits_upper()),
            damages_lower: f(c.damages_lower()),
            damages_upper: f(c.damages_upper()),
            delta_lower: f(self.metric.lower) - f(self.metric.baseline_lower),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootCauseFractions {
    pub secure_normal: f64,
    pub downgraded: f64,
    pub wasted: f64,
    pub protected: f64,
    pub newly_protected: f64,
    pub benefits_lower: f64,
    pub benefits_upper: f64,
    pub damages_lower: f64,
    pub damages_upper: f64,
    pub delta_lower: f64,
}

pub fn root_cause(
    graph: &AsGraph,
    pairs: &[(AsId, AsId)],
    deployment: &Deployment,
    policy: Policy,
) -> Result<RootCause, ScenarioError> {
    let mut rc = RootCause::default();
    for &(m, d) in pairs.iter().filter(|(m, d)| m != d) {
        let normal = compute_outcome(graph, &Scenario { destination: d, attacker: None, deployment }, policy)?;
        let at_s = attacked(graph, m, d, deployment, policy)?;
        let base = attack_baseline(graph, m, d, policy)?;
        rc.merge(&RootCause::pair(&normal, &at_s, &base));
    }
    Ok(rc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RolloutPlan {
    /// The largest tier 1s with a growing set of tier 2s, each followed by their stubs.
    Tier1And2,
    /// Growing sets of the largest tier 2s with their stubs.
    Tier2Only,
    /// Every non-stub AS.
    NonStubsOnly,
    /// Tier 1s, their stubs and the content providers.
    Tier1StubsCp,
}

impl RolloutPlan {
    pub const ALL: [RolloutPlan; 4] =
        [RolloutPlan::Tier1And2, RolloutPlan::Tier2Only, RolloutPlan::NonStubsOnly, RolloutPlan::Tier1StubsCp];

    pub fn name(self) -> &'static str {
        match self {
            RolloutPlan::Tier1And2 => "tier1and2",
            RolloutPlan::Tier2Only => "tier2only",
            RolloutPlan::NonStubsOnly => "nonstubs",
            RolloutPlan::Tier1StubsCp => "tier1stubscp",
        }
    }

    pub fn from_name(s: &str) -> Option<RolloutPlan> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutOptions {
    /// Only stubs all of whose providers are secure join; otherwise any secure provider suffices.
    pub strict_stubs: bool,
    /// Stubs originate signed routes but select routes as insecure ASes.
    pub simplex_stubs: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RolloutStep {
    pub name: String,
    pub deployment: Deployment,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RolloutError {
    #[error("plan {plan} needs {want} {tier} ASes but the graph has {have}")]
    NotEnough { plan: &'static str, tier: &'static str, want: usize, have: usize },
    #[error("tier list has {got} entries for a graph of {want} ASes")]
    SizeMismatch { got: usize, want: usize },
}

/// Deployments for each step of `plan`. Tier members are taken largest
/// customer count first, ties toward the lower ASN.
pub fn rollout_steps(
    graph: &AsGraph,
    tiers: &[Tier],
    plan: RolloutPlan,
    opts: RolloutOptions,
) -> Result<Vec<RolloutStep>, RolloutError> {
    if tiers.len() != graph.len() {
        return Err(RolloutError::SizeMismatch { got: tiers.len(), want: graph.len() });
    }
    let ranked = |t: Tier| {
        let mut v: Vec<AsId> = graph.ids().filter(|x| tiers[x.index()] == t).collect();
        v.sort_by_key(|&x| (std::cmp::Reverse(graph.count(x, Relationship::Customer)), x));
        v
    };
    let take = |t: Tier, k: usize| -> Result<Vec<AsId>, RolloutError> {
        let v = ranked(t);
        if v.len() < k {
            return Err(RolloutError::NotEnough { plan: plan.name(), tier: t.name(), want: k, have: v.len() });
        }
        Ok(v[..k].to_vec())
    };
    let t1 = ranked(Tier::Tier1);
    let mut steps = Vec::new();
    let mut push = |name: String, core: &[AsId], with_stubs: bool| {
        let stubs = if with_stubs { stubs_of(graph, tiers, core, opts.strict_stubs) } else { Vec::new() };
        steps.push(RolloutStep { name, deployment: deploy(graph.len(), core, &stubs, opts.simplex_stubs) });
    };
    match plan {
        RolloutPlan::Tier1And2 => {
            let x = take(Tier::Tier1, 13)?;
            for y in [13, 37, 100] {
                let core: Vec<AsId> = x.iter().copied().chain(take(Tier::Tier2, y)?).collect();
                push(format!("T1={} T2={y}", x.len()), &core, false);
                push(format!("T1={} T2={y} +stubs", x.len()), &core, true);
            }
        }
        RolloutPlan::Tier2Only => {
            for y in [13, 26, 50, 100] {
                push(format!("T2={y} +stubs"), &take(Tier::Tier2, y)?, true);
            }
        }
        RolloutPlan::NonStubsOnly => {
            let core: Vec<AsId> = graph.ids().filter(|v| !tiers[v.index()].is_stub()).collect();
            push("non-stubs".into(), &core, false);
        }
        RolloutPlan::Tier1StubsCp => {
            if t1.is_empty() {
                return Err(RolloutError::NotEnough { plan: plan.name(), tier: Tier::Tier1.name(), want: 1, have: 0 });
            }
            let stubs = stubs_of(graph, tiers, &t1, opts.strict_stubs);
            let core: Vec<AsId> = t1.iter().copied().chain(ranked(Tier::Cp)).collect();
            steps.push(RolloutStep {
                name: "T1 +stubs +CP".into(),
                deployment: deploy(graph.len(), &core, &stubs, opts.simplex_stubs),
            });
        }
    }
    Ok(steps)
}

fn stubs_of(graph: &AsGraph, tiers: &[Tier], core: &[AsId], strict: bool) -> Vec<AsId> {
    let mut secured = vec![false; graph.len()];
    for v in core {
        secured[v.index()] = true;
    }
    graph
        .ids()
        .filter(|v| tiers[v.index()].is_stub())
        .filter(|&v| {
            let mut provs = graph.providers(v).peekable();
            if provs.peek().is_none() {
                return false;
            }
            if strict {
                provs.all(|p| secured[p.index()])
            } else {
                provs.any(|p| secured[p.index()])
            }
        })
        .collect()
}

fn deploy(n: usize, core: &[AsId], stubs: &[AsId], simplex: bool) -> Deployment {
    let mut dep = Deployment::from_secure(n, core.iter().copied());
    for &s in stubs {
        if simplex {
            dep.set_simplex(s, true);
        } else {
            dep.set_secure(s, true);
        }
    }
    dep
}

/// Per-destination change in the surely-happy fraction, ascending.
pub fn sorted_deltas(per_destination: impl IntoIterator<Item = MetricTally>) -> Vec<f64> {
    let mut v: Vec<f64> = per_destination.into_iter().map(|t| t.report().delta_lower).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{random_deployment, random_hierarchy, RandomGraphParams};
    use crate::routing::PolicyModel;
    use crate::topology::parse_relationships;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64) -> (AsGraph, AsId, AsId, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_hierarchy(&mut rng, &RandomGraphParams::default());
        let d = rng.gen_range(0..g.len());
        let m = (d + rng.gen_range(1..g.len())) % g.len();
        (g, AsId(m as u32), AsId(d as u32), rng)
    }

    #[test]
    fn empty_deployment_has_no_effect() {
        for seed in 0..30 {
            let (g, m, d, _) = instance(seed);
            let empty = Deployment::empty(g.len());
            for model in PolicyModel::SECURE_MODELS {
                let rc = root_cause(&g, &[(m, d)], &empty, model.into()).unwrap();
                assert_eq!(rc.downgrades, DowngradeReport::default());
                assert_eq!(rc.collateral.secure_at_s, 0);
                assert_eq!(rc.metric.lower, rc.metric.baseline_lower);
                assert_eq!(rc.collateral.benefits_upper() + rc.collateral.damages_upper(), 0);
            }
        }
    }

    #[test]
    fn bounds_count_mixed_in_upper_only() {
        // 5 peers with both 3 (provider of d=1) and m=2: two 2-hop peer routes.
        let g = parse_relationships("3|1|-1\n5|3|0\n5|2|0\n".as_bytes()).unwrap();
        let id = |a| g.id_of(a).unwrap();
        let out = attack_baseline(&g, id(2), id(1), PolicyModel::SecurityThird.into()).unwrap();
        let b = happy_bounds(&out);
        assert_eq!(b, HappyBounds { lower: 1, upper: 2, denominator: 2 });
    }

    #[test]
    fn metric_skips_self_pairs_and_normalizes() {
        let g = parse_relationships("3|1|-1\n5|3|0\n5|2|0\n".as_bytes()).unwrap();
        let id = |a| g.id_of(a).unwrap();
        let pairs = [(id(2), id(1)), (id(1), id(1))];
        let t = metric(&g, &pairs, &Deployment::empty(g.len()), PolicyModel::SecurityThird.into()).unwrap();
        assert_eq!(t.pairs, 1);
        let r = t.report();
        assert!((r.h_lower - 0.5).abs() < 1e-12 && (r.h_upper - 1.0).abs() < 1e-12);
        assert_eq!(r.delta_lower, 0.0);
    }

    #[test]
    fn rollout_plan_errors_when_tiers_are_short() {
        let g = parse_relationships("1|2|-1\n".as_bytes()).unwrap();
        let tiers = vec![Tier::Tier1, Tier::Stub];
        let err = rollout_steps(&g, &tiers, RolloutPlan::Tier1And2, RolloutOptions::default()).unwrap_err();
        assert!(matches!(err, RolloutError::NotEnough { want: 13, have: 1, .. }));
        let steps = rollout_steps(&g, &tiers, RolloutPlan::Tier1StubsCp, RolloutOptions::default()).unwrap();
        assert_eq!(steps[0].deployment.secure_count(), 2);
        let simplex = RolloutOptions { simplex_stubs: true, ..Default::default() };
        let steps = rollout_steps(&g, &tiers, RolloutPlan::Tier1StubsCp, simplex).unwrap();
        assert!(steps[0].deployment.is_simplex(AsId(1)) && !steps[0].deployment.is_secure(AsId(1)));
    }

    #[test]
    fn strict_stubs_need_every_provider() {
        let g = parse_relationships("1|3|-1\n2|3|-1\n1|4|-1\n".as_bytes()).unwrap();
        let tiers = vec![Tier::Tier1, Tier::Tier2, Tier::Stub, Tier::Stub];
        let core = [AsId(0)];
        assert_eq!(stubs_of(&g, &tiers, &core, false), vec![AsId(2), AsId(3)]);
        assert_eq!(stubs_of(&g, &tiers, &core, true), vec![AsId(3)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn security_first_never_downgrades(seed in 0u64..1_000_000, p in 0.1f64..0.9) {
            let (g, m, d, mut rng) = instance(seed);
            let dep = random_deployment(&mut rng, &g, p);
            let r = downgrade_report(&g, m, d, &dep, PolicyModel::SecurityFirst.into()).unwrap();
            prop_assert_eq!(r.downgraded, 0);
            prop_assert_eq!(r.secure_normal, r.downgraded + r.wasted + r.protected);
        }

        #[test]
        fn security_third_has_no_collateral_damage(seed in 0u64..1_000_000, p in 0.1f64..0.9) {
            let (g, m, d, mut rng) = instance(seed);
            let dep = random_deployment(&mut rng, &g, p);
            let r = collateral_report(&g, m, d, &dep, PolicyModel::SecurityThird.into()).unwrap();
            prop_assert_eq!(r.counts.damages_upper(), 0);
        }

        #[test]
        fn reconstruction_inequality_holds(seed in 0u64..1_000_000, p in 0.1f64..0.9, model in 0usize..3) {
            let (g, m, d, mut rng) = instance(seed);
            let dep = random_deployment(&mut rng, &g, p);
            let rc = root_cause(&g, &[(m, d)], &dep, PolicyModel::SECURE_MODELS[model].into()).unwrap();
            prop_assert!(rc.reconstruction_holds(), "{:?}", rc);
            let c = collateral_report(&g, m, d, &dep, PolicyModel::SECURE_MODELS[model].into()).unwrap();
            let benefits: Vec<_> = c.benefits().collect();
            prop_assert!(c.damages().all(|v| !benefits.contains(&v)));
        }

        #[test]
        fn security_third_is_monotone_along_chains(seed in 0u64..1_000_000) {
            let (g, m, d, mut rng) = instance(seed);
            let policy = PolicyModel::SecurityThird.into();
            let mut dep = Deployment::empty(g.len());
            let mut prev = attack_baseline(&g, m, d, policy).unwrap();
            let mut order: Vec<AsId> = g.ids().filter(|&v| v != m).collect();
            rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
            for v in order {
                dep.set_secure(v, true);
                let next = attacked(&g, m, d, &dep, policy).unwrap();
                for u in g.ids() {
                    if prev.route(u).leads_to == LeadsTo::Destination {
                        prop_assert_eq!(next.route(u).leads_to, LeadsTo::Destination);
                    }
                }
                prev = next;
            }
        }
    }
}
