//! `qma`: batch runs of the quaternionic Monge-Ampère solver.
//!
//! Exit codes: 0 success, 1 identity failures, 2 bad config, 3 solver failure
//! (partial artifacts are still written), 4 I/O.

mod config;
mod error;
mod modes;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::modes::Run;
use crate::report::Output;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Mms,
    Identities,
    Reduce,
}

#[derive(Debug, Parser)]
#[command(name = "qma", version, about = "Quaternionic Monge-Ampère solver on flat hyperKähler tori")]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides the config's `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Flip a sign inside ∂∂_J to check that the identity suite notices.
    #[arg(long)]
    canary: bool,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QMA_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("QMA_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    init_threads()?;
    let config = config::load(&cli.config)?;
    config.validate(cli.mode)?;
    let dir = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("qma-out"));
    let out = Output::create(&dir)?;
    Run { mode: cli.mode, config: &config, out: &out, seed: cli.seed, canary: cli.canary, started }.execute()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qma: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
