//! Command-line front end: loads a topology, runs an analysis over many
//! (attacker, destination) pairs in parallel, and writes CSV tables plus a
//! `run.json` manifest.

pub mod args;
mod commands;
mod context;
mod output;

use thiserror::Error;

pub use args::{Cli, Command};
pub use context::Context;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or unusable input files.
    #[error("{0}")]
    Usage(String),
    /// A property the analysis guarantees did not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Partitions(cfg) => commands::partitions(&cfg),
        Command::Metric(cfg) => commands::metric(&cfg, false),
        Command::Rollout(cfg) => commands::metric(&cfg, true),
        Command::Downgrades(cfg) => commands::root_cause(&cfg, false),
        Command::Rootcause(cfg) => commands::root_cause(&cfg, true),
        Command::Wedgie(cfg) => commands::wedgie(&cfg),
    }
}
