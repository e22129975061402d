use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use sbgp_core::analysis::{attack_baseline, happy_bounds, MetricTally, RolloutStep, RootCause};
use sbgp_core::fixtures;
use sbgp_core::partitions::{partition, PartitionCounts, PartitionTally};
use sbgp_core::routing::{compute_outcome, wedgie_probe, Policy, PolicyModel, RoutingOutcome, Scenario};
use sbgp_core::topology::AsId;

use crate::args::{Model, RunConfig, WedgieConfig};
use crate::context::{policies, Context, InputSummary};
use crate::output::{frac, prepare_dir, write_manifest, Table};
use crate::CliError;

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    inputs: Option<&'a InputSummary>,
    pairs: usize,
    destinations: usize,
    steps: Vec<StepInfo>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct StepInfo {
    name: String,
    secure: usize,
    simplex: usize,
}

fn step_info(steps: &[RolloutStep]) -> Vec<StepInfo> {
    steps
        .iter()
        .map(|s| StepInfo {
            name: s.name.clone(),
            secure: s.deployment.secure_count(),
            simplex: s.deployment.simplex_ids().count(),
        })
        .collect()
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
}

/// Pairs grouped by destination; input is ordered by destination.
fn by_destination(pairs: &[(AsId, AsId)]) -> Vec<(AsId, Vec<AsId>)> {
    let mut out: Vec<(AsId, Vec<AsId>)> = Vec::new();
    for &(m, d) in pairs {
        match out.last_mut() {
            Some((last, ms)) if *last == d => ms.push(m),
            _ => out.push((d, vec![m])),
        }
    }
    out
}

/// Runs `f` per destination on `jobs` threads; results keep destination order.
fn fan_out<T, F>(jobs: usize, groups: &[(AsId, Vec<AsId>)], f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(AsId, &[AsId]) -> Result<T, CliError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| groups.par_iter().map(|(d, ms)| f(*d, ms)).collect())
}

fn scenario_err(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn attacked(ctx: &Context, m: AsId, d: AsId, step: &RolloutStep, policy: Policy) -> Result<RoutingOutcome, CliError> {
    let sc = Scenario { destination: d, attacker: Some(m), deployment: &step.deployment };
    compute_outcome(&ctx.graph, &sc, policy).map_err(scenario_err)
}

struct Prepared {
    ctx: Context,
    pairs: Vec<(AsId, AsId)>,
    groups: Vec<(AsId, Vec<AsId>)>,
    policies: Vec<(Model, Policy)>,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let policies = policies(cfg)?;
    let ctx = Context::load(cfg)?;
    let pairs = ctx.pairs(cfg)?;
    let groups = by_destination(&pairs);
    prepare_dir(&cfg.out)?;
    Ok(Prepared { ctx, pairs, groups, policies })
}

fn partition_cells(c: &PartitionCounts) -> Vec<String> {
    vec![
        c.classified().to_string(),
        c.immune.to_string(),
        c.protectable.to_string(),
        c.doomed.to_string(),
        c.unreachable.to_string(),
        frac(c.immune_frac()),
        frac(c.protectable_frac()),
        frac(c.doomed_frac()),
        frac(1.0 - c.doomed_frac()),
        frac(c.baseline_happy_lower_frac()),
        frac(c.baseline_happy_upper_frac()),
    ]
}

const PARTITION_HEADER: [&str; 11] = [
    "sources",
    "immune",
    "protectable",
    "doomed",
    "unreachable",
    "immune_frac",
    "protectable_frac",
    "doomed_frac",
    "not_doomed_frac",
    "happy_lower_frac",
    "happy_upper_frac",
];

pub fn partitions(cfg: &RunConfig) -> Result<(), CliError> {
    let p = prepare(cfg)?;
    let ctx = &p.ctx;
    let tier = |v: AsId| ctx.tiers[v.index()].name().to_string();
    // Per destination: for each model, tallies keyed by source tier and by destination tier.
    let per_dest = fan_out(cfg.jobs, &p.groups, |d, ms| {
        let mut out = Vec::with_capacity(p.policies.len());
        for &(_, policy) in &p.policies {
            let mut by_source = PartitionTally::default();
            let mut by_dest = PartitionTally::default();
            for &m in ms {
                let r = partition(&ctx.graph, m, d, policy, cfg.exact_first).map_err(scenario_err)?;
                by_source.add(&r, tier);
                by_dest.add(&r, |_| tier(d));
            }
            out.push((by_source, by_dest));
        }
        Ok(out)
    })?;

    let mut head = vec!["model", "pairs"];
    head.extend(PARTITION_HEADER);
    let mut overall = Table::create(&cfg.out, "partitions.csv", &head)?;
    let mut tier_head = vec!["model", "tier"];
    tier_head.extend(PARTITION_HEADER);
    let mut by_src_t = Table::create(&cfg.out, "partitions_by_source_tier.csv", &tier_head)?;
    let mut by_dst_t = Table::create(&cfg.out, "partitions_by_destination_tier.csv", &tier_head)?;
    for (i, (model, _)) in p.policies.iter().enumerate() {
        let mut src = PartitionTally::default();
        let mut dst = PartitionTally::default();
        for d in &per_dest {
            src.merge(&d[i].0);
            dst.merge(&d[i].1);
        }
        let mut row = vec![model.to_string(), p.pairs.len().to_string()];
        row.extend(partition_cells(&src.total()));
        overall.row(row)?;
        for (table, tally) in [(&mut by_src_t, &src), (&mut by_dst_t, &dst)] {
            for (t, c) in &tally.groups {
                let mut row = vec![model.to_string(), t.clone()];
                row.extend(partition_cells(c));
                table.row(row)?;
            }
        }
    }
    let outputs = vec![overall.finish()?, by_src_t.finish()?, by_dst_t.finish()?];
    finish(cfg, "partitions", ctx, &p, Vec::new(), &outputs)
}

fn finish(
    cfg: &RunConfig,
    command: &'static str,
    ctx: &Context,
    p: &Prepared,
    steps: Vec<StepInfo>,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let manifest = Manifest {
        tool: "sbgp",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        inputs: Some(&ctx.inputs),
        pairs: p.pairs.len(),
        destinations: p.groups.len(),
        steps,
        outputs: file_names(outputs),
    };
    write_manifest(&cfg.out, &manifest)?;
    for o in outputs {
        println!("{}", o.display());
    }
    Ok(())
}

fn metric_cells(t: &MetricTally) -> Vec<String> {
    let r = t.report();
    vec![
        r.pairs.to_string(),
        frac(r.h_lower),
        frac(r.h_upper),
        frac(r.baseline_lower),
        frac(r.baseline_upper),
        frac(r.delta_lower),
        frac(r.delta_upper),
    ]
}

const METRIC_HEADER: [&str; 7] =
    ["pairs", "h_lower", "h_upper", "baseline_lower", "baseline_upper", "delta_lower", "delta_upper"];

/// Metric for every deployment step and model. With `rollout`, also the
/// metric restricted to secure destinations and their sorted deltas.
pub fn metric(cfg: &RunConfig, rollout: bool) -> Result<(), CliError> {
    if rollout && !matches!(cfg.deploy, crate::args::DeploySpec::Plan(_)) {
        return Err(CliError::Usage("rollout needs --deploy plan:NAME".into()));
    }
    let p = prepare(cfg)?;
    let ctx = &p.ctx;
    let steps = ctx.deployments(cfg)?;
    let nm = p.policies.len();
    // Nothing is secure in the baseline, so every model shares it.
    let base_policy = p.policies[0].1;
    let per_dest: Vec<Vec<MetricTally>> = fan_out(cfg.jobs, &p.groups, |d, ms| {
        let mut t = vec![MetricTally::default(); steps.len() * nm];
        for &m in ms {
            let base = happy_bounds(&attack_baseline(&ctx.graph, m, d, base_policy).map_err(scenario_err)?);
            for (si, step) in steps.iter().enumerate() {
                for (mi, &(model, policy)) in p.policies.iter().enumerate() {
                    let at_s = happy_bounds(&attacked(ctx, m, d, step, policy)?);
                    if model == Model::Third && at_s.lower < base.lower {
                        return Err(CliError::Invariant(format!(
                            "security third lost surely-happy sources for attacker AS{} destination AS{} at step {:?}",
                            ctx.graph.asn(m),
                            ctx.graph.asn(d),
                            step.name
                        )));
                    }
                    t[si * nm + mi].merge(&MetricTally::pair(&base, &at_s));
                }
            }
        }
        Ok(t)
    })?;

    let mut head = vec!["step", "secure", "simplex", "model"];
    if rollout {
        head.push("scope");
    }
    head.extend(METRIC_HEADER);
    let name = if rollout { "rollout.csv" } else { "metric.csv" };
    let mut table = Table::create(&cfg.out, name, &head)?;
    let mut deltas = if rollout {
        Some(Table::create(&cfg.out, "rollout_destination_deltas.csv", &["step", "model", "rank", "destination", "delta_lower", "delta_upper"])?)
    } else {
        None
    };
    for (si, step) in steps.iter().enumerate() {
        for (mi, (model, _)) in p.policies.iter().enumerate() {
            let k = si * nm + mi;
            let prefix = vec![
                step.name.clone(),
                step.deployment.secure_count().to_string(),
                step.deployment.simplex_ids().count().to_string(),
                model.to_string(),
            ];
            let mut all = MetricTally::default();
            for t in &per_dest {
                all.merge(&t[k]);
            }
            let mut row = prefix.clone();
            if rollout {
                row.push("all".into());
            }
            row.extend(metric_cells(&all));
            table.row(row)?;
            if let Some(deltas) = deltas.as_mut() {
                let secure: Vec<(AsId, &MetricTally)> = p
                    .groups
                    .iter()
                    .zip(&per_dest)
                    .filter(|((d, _), _)| step.deployment.signs_origin(*d))
                    .map(|((d, _), t)| (*d, &t[k]))
                    .collect();
                let mut sec = MetricTally::default();
                for (_, t) in &secure {
                    sec.merge(t);
                }
                let mut row = prefix;
                row.push("secure_destinations".into());
                row.extend(metric_cells(&sec));
                table.row(row)?;
                let mut sorted: Vec<(f64, f64, AsId)> = secure
                    .iter()
                    .map(|(d, t)| {
                        let r = t.report();
                        (r.delta_lower, r.delta_upper, *d)
                    })
                    .collect();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
                for (rank, (lo, hi, d)) in sorted.into_iter().enumerate() {
                    deltas.row([
                        step.name.clone(),
                        model.to_string(),
                        rank.to_string(),
                        ctx.graph.asn(d).to_string(),
                        frac(lo),
                        frac(hi),
                    ])?;
                }
            }
        }
    }
    let mut outputs = vec![table.finish()?];
    if let Some(d) = deltas {
        outputs.push(d.finish()?);
    }
    let command = if rollout { "rollout" } else { "metric" };
    finish(cfg, command, ctx, &p, step_info(&steps), &outputs)
}

/// Downgrade accounting, and with `full` the whole decomposition.
pub fn root_cause(cfg: &RunConfig, full: bool) -> Result<(), CliError> {
    if cfg.model.contains(&Model::Insecure) {
        return Err(CliError::Usage("downgrade and root-cause analysis need a secure model".into()));
    }
    let p = prepare(cfg)?;
    let ctx = &p.ctx;
    let steps = ctx.deployments(cfg)?;
    let nm = p.policies.len();
    let base_policy = p.policies[0].1;
    let per_dest: Vec<Vec<RootCause>> = fan_out(cfg.jobs, &p.groups, |d, ms| {
        let mut t = vec![RootCause::default(); steps.len() * nm];
        for &m in ms {
            let base = attack_baseline(&ctx.graph, m, d, base_policy).map_err(scenario_err)?;
            for (si, step) in steps.iter().enumerate() {
                for (mi, &(model, policy)) in p.policies.iter().enumerate() {
                    let sc = Scenario { destination: d, attacker: None, deployment: &step.deployment };
                    let normal = compute_outcome(&ctx.graph, &sc, policy).map_err(scenario_err)?;
                    let at_s = attacked(ctx, m, d, step, policy)?;
                    let rc = RootCause::pair(&normal, &at_s, &base);
                    check_pair(ctx, m, d, step, model, &rc)?;
                    t[si * nm + mi].merge(&rc);
                }
            }
        }
        Ok(t)
    })?;

    let mut head = vec!["step", "model"];
    let mut table = if full {
        head.extend([
            "pairs",
            "secure_normal",
            "downgraded",
            "wasted",
            "protected",
            "newly_protected",
            "benefits_lower",
            "benefits_upper",
            "damages_lower",
            "damages_upper",
            "delta_lower",
            "delta_lower_min",
            "delta_lower_max",
        ]);
        Table::create(&cfg.out, "rootcause.csv", &head)?
    } else {
        head.extend(["pairs", "secure_normal", "downgraded", "wasted", "protected", "excluded", "downgraded_share"]);
        Table::create(&cfg.out, "downgrades.csv", &head)?
    };
    for (si, step) in steps.iter().enumerate() {
        for (mi, (model, _)) in p.policies.iter().enumerate() {
            let mut rc = RootCause::default();
            for t in &per_dest {
                rc.merge(&t[si * nm + mi]);
            }
            let mut row = vec![step.name.clone(), model.to_string(), rc.metric.pairs.to_string()];
            let dg = &rc.downgrades;
            if full {
                let f = rc.fractions();
                let (lo, hi) = rc.delta_bounds();
                let per = |x: i64| if rc.metric.sources == 0 { 0.0 } else { x as f64 / rc.metric.sources as f64 };
                row.extend([
                    f.secure_normal,
                    f.downgraded,
                    f.wasted,
                    f.protected,
                    f.newly_protected,
                    f.benefits_lower,
                    f.benefits_upper,
                    f.damages_lower,
                    f.damages_upper,
                    f.delta_lower,
                    per(lo),
                    per(hi),
                ]
                .map(frac));
            } else {
                let share = if dg.secure_normal == 0 { 0.0 } else { dg.downgraded as f64 / dg.secure_normal as f64 };
                row.extend([dg.secure_normal, dg.downgraded, dg.wasted, dg.protected, dg.excluded].map(|x| x.to_string()));
                row.push(frac(share));
            }
            table.row(row)?;
        }
    }
    let outputs = vec![table.finish()?];
    let command = if full { "rootcause" } else { "downgrades" };
    finish(cfg, command, ctx, &p, step_info(&steps), &outputs)
}

fn check_pair(ctx: &Context, m: AsId, d: AsId, step: &RolloutStep, model: Model, rc: &RootCause) -> Result<(), CliError> {
    let fail = |what: &str| {
        Err(CliError::Invariant(format!(
            "{what} for attacker AS{} destination AS{} at step {:?} under {model}",
            ctx.graph.asn(m),
            ctx.graph.asn(d),
            step.name
        )))
    };
    if !rc.reconstruction_holds() {
        return fail("metric change outside its decomposition bounds");
    }
    if model.policy_model() == PolicyModel::SecurityFirst && rc.downgrades.downgraded > 0 {
        return fail("downgrade under security first");
    }
    if model.policy_model() == PolicyModel::SecurityThird && rc.collateral.damages_upper() > 0 {
        return fail("collateral damage under security third");
    }
    Ok(())
}

#[derive(Serialize)]
struct WedgieSummary {
    fixture: &'static str,
    destination: u32,
    link: (u32, u32),
    trials: u64,
    stable_states: usize,
}

pub fn wedgie(cfg: &WedgieConfig) -> Result<(), CliError> {
    prepare_dir(&cfg.out)?;
    let w = fixtures::wedgie();
    let f = &w.fixture;
    let states = wedgie_probe(&f.graph, &f.scenario(), &w.policies, w.link, cfg.trials).map_err(scenario_err)?;
    let mut table = Table::create(&cfg.out, "wedgie.csv", &["state", "asn", "path"])?;
    for (i, s) in states.iter().enumerate() {
        for v in f.graph.ids() {
            let path = s[v.index()]
                .as_ref()
                .map(|p| p.iter().map(|&x| f.graph.asn(x).to_string()).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            table.row([i.to_string(), f.graph.asn(v).to_string(), path])?;
        }
    }
    let out = table.finish()?;
    let summary = WedgieSummary {
        fixture: f.name,
        destination: f.graph.asn(f.destination),
        link: (f.graph.asn(w.link.0), f.graph.asn(w.link.1)),
        trials: cfg.trials,
        stable_states: states.len(),
    };
    #[derive(Serialize)]
    struct WedgieManifest<'a> {
        tool: &'static str,
        version: &'static str,
        command: &'static str,
        config: &'a WedgieConfig,
        result: WedgieSummary,
        outputs: Vec<String>,
    }
    write_manifest(
        &cfg.out,
        &WedgieManifest {
            tool: "sbgp",
            version: env!("CARGO_PKG_VERSION"),
            command: "wedgie",
            config: cfg,
            result: summary,
            outputs: file_names(std::slice::from_ref(&out)),
        },
    )?;
    println!("stable states: {}", states.len());
    println!("{}", out.display());
    Ok(())
}
