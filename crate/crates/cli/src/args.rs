use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sbgp_core::analysis::RolloutPlan;
use sbgp_core::routing::PolicyModel;

#[derive(Debug, Parser)]
#[command(name = "sbgp", version, about = "Partial S*BGP deployment simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Immune / protectable / doomed fractions, overall and per tier.
    Partitions(RunConfig),
    /// Happy-source bounds for a deployment or every step of a plan.
    Metric(RunConfig),
    /// Metric per rollout step, plus per-destination deltas for secure destinations.
    Rollout(RunConfig),
    /// Downgrade accounting of secure routes under attack.
    Downgrades(RunConfig),
    /// Decomposition of the metric change into protection and collateral effects.
    Rootcause(RunConfig),
    /// Stable states of the built-in mixed-policy fixture across link flaps.
    Wedgie(WedgieConfig),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Relationship file (`a|b|rel`), or `synthetic:N:SEED` for a generated topology.
    #[arg(long)]
    pub graph: String,
    /// IXP membership file (`ixp,asn` lines); members are joined by peer links.
    #[arg(long)]
    pub ixp: Option<PathBuf>,
    /// Tier-1 ASN list. When given, low-degree provider-free ASes outside it are pruned first.
    #[arg(long)]
    pub tier1_seed: Option<PathBuf>,
    /// Provider-free ASes with fewer neighbors than this are pruned.
    #[arg(long, default_value_t = sbgp_core::topology::DEFAULT_MIN_DEGREE)]
    pub min_degree: usize,
    /// Content-provider ASN list (defaults to the built-in list).
    #[arg(long)]
    pub cp_list: Option<PathBuf>,
    /// Policy models, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [Model::First, Model::Second, Model::Third])]
    pub model: Vec<Model>,
    /// Rank customer and peer routes of at most K hops together by length.
    #[arg(long)]
    pub lpk: Option<u32>,
    /// all | nonstub | file:PATH | sample:N:SEED
    #[arg(long, default_value = "all")]
    pub attackers: Selector,
    /// all | nonstub | file:PATH | sample:N:SEED
    #[arg(long, default_value = "all")]
    pub destinations: Selector,
    /// Sample N distinct (attacker, destination) pairs from the selected sets: N:SEED.
    #[arg(long)]
    pub pairs: Option<PairSample>,
    /// Security-first partitions commit to immune/doomed labels where they are certain.
    #[arg(long)]
    pub exact_first: bool,
    /// none | file:PATH | plan:NAME (tier1and2, tier2only, nonstubs, tier1stubscp)
    #[arg(long, default_value = "none")]
    pub deploy: DeploySpec,
    /// Deployed stubs sign their origin but select routes as insecure ASes.
    #[arg(long)]
    pub simplex_stubs: bool,
    /// A plan's stubs join only when all their providers are secure.
    #[arg(long)]
    pub strict_stubs: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WedgieConfig {
    /// Seeded activation orders to try.
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    First,
    Second,
    Third,
    Insecure,
}

impl Model {
    pub fn policy_model(self) -> PolicyModel {
        match self {
            Model::First => PolicyModel::SecurityFirst,
            Model::Second => PolicyModel::SecuritySecond,
            Model::Third => PolicyModel::SecurityThird,
            Model::Insecure => PolicyModel::InsecureOnly,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::First => "first",
            Model::Second => "second",
            Model::Third => "third",
            Model::Insecure => "insecure",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    All,
    NonStub,
    File(PathBuf),
    Sample { n: usize, seed: u64 },
}

fn parse_n_seed(s: &str) -> Result<(usize, u64), String> {
    let (n, seed) = s.split_once(':').ok_or_else(|| format!("expected N:SEED, got {s:?}"))?;
    let n = n.parse().map_err(|_| format!("bad count {n:?}"))?;
    let seed = seed.parse().map_err(|_| format!("bad seed {seed:?}"))?;
    Ok((n, seed))
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Selector::All),
            "nonstub" => Ok(Selector::NonStub),
            _ => {
                if let Some(p) = s.strip_prefix("file:") {
                    Ok(Selector::File(p.into()))
                } else if let Some(rest) = s.strip_prefix("sample:") {
                    let (n, seed) = parse_n_seed(rest)?;
                    Ok(Selector::Sample { n, seed })
                } else {
                    Err(format!("unknown selector {s:?}; use all, nonstub, file:PATH or sample:N:SEED"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairSample {
    pub n: usize,
    pub seed: u64,
}

impl FromStr for PairSample {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, seed) = parse_n_seed(s)?;
        Ok(PairSample { n, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeploySpec {
    None,
    File(PathBuf),
    Plan(RolloutPlan),
}

impl FromStr for DeploySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            Ok(DeploySpec::None)
        } else if let Some(p) = s.strip_prefix("file:") {
            Ok(DeploySpec::File(p.into()))
        } else if let Some(name) = s.strip_prefix("plan:") {
            RolloutPlan::from_name(name).map(DeploySpec::Plan).ok_or_else(|| {
                let names: Vec<&str> = RolloutPlan::ALL.iter().map(|p| p.name()).collect();
                format!("unknown plan {name:?}; expected one of {}", names.join(", "))
            })
        } else {
            Err(format!("unknown deployment {s:?}; use none, file:PATH or plan:NAME"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_and_specs_parse() {
        assert_eq!("sample:20:7".parse::<Selector>(), Ok(Selector::Sample { n: 20, seed: 7 }));
        assert_eq!("file:x.txt".parse::<Selector>(), Ok(Selector::File("x.txt".into())));
        assert!("sample:20".parse::<Selector>().is_err());
        assert_eq!("plan:Tier1And2".parse::<DeploySpec>(), Ok(DeploySpec::Plan(RolloutPlan::Tier1And2)));
        assert!("plan:bogus".parse::<DeploySpec>().is_err());
        assert_eq!("100:3".parse::<PairSample>(), Ok(PairSample { n: 100, seed: 3 }));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
