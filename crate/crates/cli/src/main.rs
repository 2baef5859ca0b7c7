//! Batch pipeline over a workspace directory: inspect app packages,
//! simulate or profile measurement traces, mine reviews, and correlate
//! measured costs with user ratings.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::{Context, Overrides};

#[derive(Parser)]
#[command(
    name = "intelliad",
    version,
    about = "Measure in-app ad costs and correlate them with user perception"
)]
struct Cli {
    /// Workspace config file (JSON).
    #[arg(long, global = true, env = "INTELLIAD_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for all stochastic stages (clustering, simulation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cluster count for phrase topic mining.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Reviews at or above this rating are treated as content.
    #[arg(long, global = true)]
    rating_cutoff: Option<u8>,
    /// Expected measurement repetitions per scheme.
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect ad networks, formats, and ad counts in app packages.
    Inspect {
        /// App package directories (decompiled trees or dirs with .dex
        /// files). Defaults to the config's apps directory.
        apps: Vec<PathBuf>,
    },
    /// Generate synthetic measurement traces from a scenario file.
    Simulate {
        /// Scenario JSON; defaults to the config's scenario path.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Compute per-scheme cost vectors and increase rates from traces.
    Profile {
        /// Traces directory holding index.json; defaults to the config's
        /// traces path or <out>/traces.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Filter, mine, and classify user reviews; aggregate ratings.
    Reviews,
    /// Join profile and review outputs; compute Pearson correlations.
    Correlate,
    /// Consolidate stage outputs into report files.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(outcome) => {
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            for error in &outcome.errors {
                eprintln!("error: {error}");
            }
            if outcome.errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    let ctx = Context::load(
        cli.config.as_deref(),
        Overrides {
            out: cli.out,
            seed: cli.seed,
            k: cli.k,
            rating_cutoff: cli.rating_cutoff,
            runs: cli.runs,
        },
    )?;
    match cli.command {
        Command::Inspect { apps } => commands::inspect::run(&ctx, &apps),
        Command::Simulate { plan } => commands::simulate::run(&ctx, plan.as_deref()),
        Command::Profile { traces } => commands::profile::run(&ctx, traces.as_deref()),
        Command::Reviews => commands::reviews::run(&ctx),
        Command::Correlate => commands::correlate::run(&ctx),
        Command::Report => commands::report::run(&ctx),
    }
}
