//! Command-line front end: robustness certification, single runs and Monte
//! Carlo batches over scenario files or the bundled surrogate scenarios.

pub mod bundled;
mod commands;
pub mod scenario;

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

pub use commands::OUT_ENV;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_HELD: i32 = 10;

#[derive(Debug, Parser)]
#[command(name = "mwmsr", version, about = "Resilient multi-hop event-triggered consensus simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide strong (r,s)-robustness with l hops; exit 0 if it holds, 10 if not.
    CheckRobustness(CheckArgs),
    /// Run a scenario once per variant and write trajectories and metrics.
    Simulate(SimulateArgs),
    /// Run a scenario repeatedly with sampled initial states and aggregate.
    Montecarlo(MonteCarloArgs),
    /// List the bundled scenarios and their certified properties.
    ListScenarios,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("faults").args(["f_total", "f_local", "fault_set"])))]
pub struct CheckArgs {
    /// Graph file (JSON or edge list), bundled graph or bundled scenario name.
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Hop range l.
    #[arg(long, visible_alias = "l", default_value_t = 1)]
    pub hops: usize,
    /// Every fault set of at most N nodes (the default, with N = 0).
    #[arg(long, value_name = "N")]
    pub f_total: Option<usize>,
    /// Every fault set with at most N members in each outside node's l-hop in-neighborhood.
    #[arg(long, value_name = "N")]
    pub f_local: Option<usize>,
    /// One explicit fault set, e.g. "1,3"; checks (r,s)-robustness with respect to it.
    #[arg(long, value_name = "IDS")]
    pub fault_set: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file or bundled scenario name.
    #[arg(long)]
    pub scenario: String,
    /// Variant as comma-separated key=value (keys: l, relay, name); repeatable.
    #[arg(long)]
    pub variant: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: $MWMSR_OUT, else ./mwmsr-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub count_packages_once: bool,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub variant: Vec<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub count_packages_once: bool,
}

/// Execute a parsed command line and return the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::CheckRobustness(a) => commands::check(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Montecarlo(a) => commands::montecarlo(a),
        Command::ListScenarios => commands::list_scenarios(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}
