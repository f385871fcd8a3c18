//! `pushpull` command-line harness.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pushpull::sweep::Method;

#[derive(Debug, Parser)]
#[command(name = "pushpull", version, about = "Pull, push and periodic update policies for remotely controlled MDPs")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for instance generation and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Discount factor, overriding the configured or stored one.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Cap on the elapsed time between updates.
    #[arg(long, global = true)]
    tmax: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 picks one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Use the large grid: 30 states, 15 densities, 21 costs.
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a suite of random instances and its manifest.
    Generate,
    /// Solve every (instance, method, cost) cell and write results.csv.
    Sweep {
        /// Manifest written by `generate`; without it the suite is generated in memory.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Record per-cell wall time instead of `NA`.
        #[arg(long)]
        timing: bool,
    },
    /// Solve one instance with one method and write the policy and its evaluation.
    Solve {
        /// MDP JSON file, or `counterexample`.
        instance: String,
        #[arg(long, default_value = "pull")]
        method: Method,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
    },
    /// Run the verification battery; exits with 1 if any check fails.
    Verify,
    /// Simulate a solved policy and write Peak-AoI distributions.
    AoiHist {
        /// MDP JSON file, or `counterexample`.
        instance: String,
        #[arg(long, default_value = "pull")]
        method: Method,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Generate => commands::generate(g),
        Command::Sweep { manifest, timing } => commands::sweep(g, manifest.as_deref(), *timing),
        Command::Solve { instance, method, beta } => commands::solve(g, instance, *method, *beta),
        Command::Verify => commands::verify(g),
        Command::AoiHist { instance, method, beta, steps, episodes } => {
            commands::aoi_hist(g, instance, *method, *beta, *steps, *episodes)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
