//! `west`: simulate trajectories, partition regions, build adjacencies,
//! train per-hop-count GCN-LSTM models and forecast regional traffic.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "west", version, about = "Regional traffic forecasting with weighted stacked GCN-LSTM models")]
struct Cli {
    /// JSON run configuration [default: built-in defaults, see `west config init`]
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config key by dotted path, e.g. `train.epochs=50`; repeatable [default: none]
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Use this seed for every stage [default: the `seeds` block of the config, all 0]
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Configuration helpers
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
    /// Generate synthetic trajectories
    Simulate,
    /// Cluster trajectory points and build Voronoi regions
    Regions,
    /// Build the region adjacency selected by `adjacency_mode`
    Adjacency,
    /// Report the hop count for each population
    Hops,
    /// Train one model per hop count and save checkpoints
    Train,
    /// Score saved checkpoints and the baseline adjacencies on the test windows
    Evaluate,
    /// Forecast the steps following the end of the series
    Predict,
}

#[derive(Debug, Subcommand)]
enum ConfigAction {
    /// Print the effective configuration as JSON
    Init {
        /// Write to this file instead of stdout [default: stdout]
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.set, cli.seed)?;
    match cli.command {
        Command::Config {
            action: ConfigAction::Init { out },
        } => commands::config_init(&cfg, out.as_deref()),
        Command::Simulate => commands::simulate(&cfg),
        Command::Regions => commands::regions(&cfg),
        Command::Adjacency => commands::adjacency(&cfg),
        Command::Hops => commands::hops(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Predict => commands::predict(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
