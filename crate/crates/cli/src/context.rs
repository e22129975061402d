use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use sbgp_core::analysis::{rollout_steps, RolloutOptions, RolloutStep};
use sbgp_core::routing::{Deployment, LocalPref, Policy};
use sbgp_core::topology::{
    augment_with_ixps, classify_tiers, parse_asn_list, parse_ixp_records, parse_relationships, preprocess,
    synthetic_internet, synthetic_tier1_asn, write_relationships, AsGraph, AsId, Asn, IxpReport,
    PreprocessReport, SyntheticParams, Tier, TierConfig,
};

use crate::args::{DeploySpec, RunConfig, Selector};
use crate::CliError;

/// Everything derived from the input files, before any routing.
pub struct Context {
    pub graph: AsGraph,
    pub tiers: Vec<Tier>,
    pub inputs: InputSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    /// SHA-256 of the relationship data as read (or as generated).
    pub graph_sha256: String,
    pub ases: usize,
    pub edges: usize,
    pub ixp: Option<IxpReport>,
    pub preprocess: Option<PreprocessSummary>,
    pub tier_counts: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreprocessSummary {
    pub removed: usize,
    pub provider_free_survivors: Vec<Asn>,
}

impl From<&PreprocessReport> for PreprocessSummary {
    fn from(r: &PreprocessReport) -> Self {
        PreprocessSummary { removed: r.removed.len(), provider_free_survivors: r.provider_free_survivors.clone() }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn asn_list(path: &Path) -> Result<Vec<Asn>, CliError> {
    parse_asn_list(open(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parse_synthetic(spec: &str) -> Result<Option<SyntheticParams>, CliError> {
    let Some(rest) = spec.strip_prefix("synthetic:") else { return Ok(None) };
    let bad = || CliError::Usage(format!("expected synthetic:N:SEED, got {spec:?}"));
    let (n, seed) = rest.split_once(':').ok_or_else(bad)?;
    let ases: usize = n.parse().map_err(|_| bad())?;
    let seed: u64 = seed.parse().map_err(|_| bad())?;
    let p = SyntheticParams { ases, seed, ..Default::default() };
    if ases < p.tier1 + 2 {
        return Err(CliError::Usage(format!("synthetic graphs need at least {} ASes", p.tier1 + 2)));
    }
    Ok(Some(p))
}

impl Context {
    pub fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        let (mut graph, bytes, implied_seed) = match parse_synthetic(&cfg.graph)? {
            Some(p) => {
                let g = synthetic_internet(&p);
                let mut text = Vec::new();
                write_relationships(&g, &mut text).expect("in-memory write");
                let seed: Vec<Asn> = (0..p.tier1).map(synthetic_tier1_asn).collect();
                (g, text, Some(seed))
            }
            None => {
                let bytes = std::fs::read(&cfg.graph).map_err(|e| CliError::Usage(format!("{}: {e}", cfg.graph)))?;
                let g = parse_relationships(&bytes[..]).map_err(|e| CliError::Usage(format!("{}: {e}", cfg.graph)))?;
                (g, bytes, None)
            }
        };
        let graph_sha256 = sha256_hex(&bytes);

        let tier1_seed = match &cfg.tier1_seed {
            Some(p) => Some(asn_list(p)?),
            None => implied_seed,
        };
        let mut pre = None;
        if let Some(seed) = &tier1_seed {
            let (g, report) =
                preprocess(&graph, seed, cfg.min_degree).map_err(|e| CliError::Usage(format!("preprocess: {e}")))?;
            graph = g;
            pre = Some(PreprocessSummary::from(&report));
        }
        let mut ixp = None;
        if let Some(path) = &cfg.ixp {
            let records =
                parse_ixp_records(open(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let (g, report) = augment_with_ixps(&graph, &records);
            graph = g;
            ixp = Some(report);
        }
        if graph.len() < 3 {
            return Err(CliError::Usage("graph has fewer than 3 ASes".into()));
        }

        let mut tcfg = TierConfig { tier1_seed, ..Default::default() };
        if let Some(p) = &cfg.cp_list {
            tcfg.cp_asns = asn_list(p)?;
        }
        let tiers = classify_tiers(&graph, &tcfg).map_err(|e| CliError::Usage(format!("tiers: {e}")))?;
        let tier_counts = Tier::ALL
            .iter()
            .map(|&t| (t.name().to_string(), tiers.iter().filter(|&&x| x == t).count()))
            .collect();
        let inputs = InputSummary {
            graph_sha256,
            ases: graph.len(),
            edges: graph.edge_count(),
            ixp,
            preprocess: pre,
            tier_counts,
        };
        Ok(Context { graph, tiers, inputs })
    }

    /// Resolves a selector to ascending AS ids.
    pub fn select(&self, sel: &Selector) -> Result<Vec<AsId>, CliError> {
        let ids: Vec<AsId> = match sel {
            Selector::All => self.graph.ids().collect(),
            Selector::NonStub => self.graph.ids().filter(|v| !self.tiers[v.index()].is_stub()).collect(),
            Selector::File(p) => {
                let mut v = Vec::new();
                for asn in asn_list(p)? {
                    v.push(self.graph.id_of(asn).ok_or_else(|| {
                        CliError::Usage(format!("{}: AS{asn} is not in the graph", p.display()))
                    })?);
                }
                v
            }
            Selector::Sample { n, seed } => {
                if *n > self.graph.len() {
                    return Err(CliError::Usage(format!("cannot sample {n} of {} ASes", self.graph.len())));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                sample(&mut rng, self.graph.len(), *n).into_iter().map(|i| AsId(i as u32)).collect()
            }
        };
        let set: BTreeSet<AsId> = ids.into_iter().collect();
        if set.is_empty() {
            return Err(CliError::Usage("selector matched no ASes".into()));
        }
        Ok(set.into_iter().collect())
    }

    /// (attacker, destination) pairs ordered by destination then attacker.
    pub fn pairs(&self, cfg: &RunConfig) -> Result<Vec<(AsId, AsId)>, CliError> {
        let ms = self.select(&cfg.attackers)?;
        let ds = self.select(&cfg.destinations)?;
        let mut pairs: BTreeSet<(AsId, AsId)> = BTreeSet::new();
        match cfg.pairs {
            None => {
                for &d in &ds {
                    pairs.extend(ms.iter().filter(|&&m| m != d).map(|&m| (d, m)));
                }
            }
            Some(s) => {
                let total = ms.len() * ds.len();
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                // Rejection sampling; the cap only matters when nearly every pair is requested.
                for _ in 0..s.n.saturating_mul(50).max(1000) {
                    if pairs.len() == s.n {
                        break;
                    }
                    let k = rng.gen_range(0..total);
                    let (d, m) = (ds[k / ms.len()], ms[k % ms.len()]);
                    if m != d {
                        pairs.insert((d, m));
                    }
                }
                if pairs.len() < s.n {
                    return Err(CliError::Usage(format!("only {} distinct pairs available, {} requested", pairs.len(), s.n)));
                }
            }
        }
        if pairs.is_empty() {
            return Err(CliError::Usage("no (attacker, destination) pairs with distinct ASes".into()));
        }
        Ok(pairs.into_iter().map(|(d, m)| (m, d)).collect())
    }

    /// Named deployments to evaluate; `none` yields the empty deployment.
    pub fn deployments(&self, cfg: &RunConfig) -> Result<Vec<RolloutStep>, CliError> {
        let n = self.graph.len();
        match &cfg.deploy {
            DeploySpec::None => Ok(vec![RolloutStep { name: "empty".into(), deployment: Deployment::empty(n) }]),
            DeploySpec::File(p) => {
                let mut dep = Deployment::empty(n);
                for asn in asn_list(p)? {
                    let v = self.graph.id_of(asn).ok_or_else(|| {
                        CliError::Usage(format!("{}: AS{asn} is not in the graph", p.display()))
                    })?;
                    let stub = self.tiers[v.index()].is_stub();
                    if cfg.simplex_stubs && stub {
                        dep.set_simplex(v, true);
                    } else {
                        dep.set_secure(v, true);
                    }
                }
                Ok(vec![RolloutStep { name: "file".into(), deployment: dep }])
            }
            DeploySpec::Plan(plan) => {
                let opts = RolloutOptions { strict_stubs: cfg.strict_stubs, simplex_stubs: cfg.simplex_stubs };
                rollout_steps(&self.graph, &self.tiers, *plan, opts).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }
}

pub fn policies(cfg: &RunConfig) -> Result<Vec<(crate::args::Model, Policy)>, CliError> {
    if cfg.model.is_empty() {
        return Err(CliError::Usage("no model selected".into()));
    }
    let lp = cfg.lpk.map_or(LocalPref::Standard, LocalPref::LengthClasses);
    Ok(cfg.model.iter().map(|&m| (m, Policy::with_local_pref(m.policy_model(), lp))).collect())
}
