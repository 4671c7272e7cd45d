//! `qtl`: build datasets, pretrain classical models, graft dressed quantum
//! heads, count parameters and export convergence data.

mod commands;
mod config;
mod out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "qtl", version, about = "Quantum transfer learning on convolutional classifiers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the command's main random process.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (dataset build) or directory (other commands).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print one JSON document on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build, inspect or convert datasets.
    Dataset {
        #[command(subcommand)]
        action: commands::dataset::DatasetCmd,
    },
    /// Train a classical preset with restarts and keep the best run.
    TrainClassical(commands::train::TrainArgs),
    /// Cut a classical checkpoint, attach a dressed quantum head and cross-validate it.
    Transfer(commands::transfer::TransferArgs),
    /// Per-layer parameter counts, optionally with a quantum replacement.
    Params(commands::params::ParamsArgs),
    /// Merge convergence CSVs into plot-ready files.
    Report(commands::report::ReportArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(qtl_core::Error::Config(_)) = cause.downcast_ref::<qtl_core::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Dataset { action } => commands::dataset::run(g, action),
        Command::TrainClassical(a) => commands::train::run(g, a),
        Command::Transfer(a) => commands::transfer::run(g, a),
        Command::Params(a) => commands::params::run(g, a),
        Command::Report(a) => commands::report::run(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
