//! Command-line driver: single runs, seeded suites, oracle-importance runs,
//! and metric reports over suite directories.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gauss_core::engine::EngineError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("runtime: {0}")]
    Runtime(String),
    #[error("no random baseline: {0}")]
    MissingBaseline(String),
    #[error("not analyzable: {0}")]
    Unanalyzed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dataset(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::MissingBaseline(_) => 5,
            CliError::Unanalyzed(_) => 6,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(_) | EngineError::TrackingDisabled(_) => CliError::Config(e.to_string()),
            EngineError::Dataset(_) => CliError::Dataset(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gauss", version, about = "Switch-event driven active learning experiments")]
#[command(after_help = "Any config key may be overridden with a dotted flag, e.g. --al.batch 32")]
pub struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for run and suite results.
    #[arg(long, global = true, default_value = "gauss-out")]
    pub out: PathBuf,
    /// Worker threads for suites.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Added to every configured seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed_offset: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment (first listed strategy, mode and seed).
    Run,
    /// Run every (mode, strategy, seed) combination plus the random baseline.
    Suite,
    /// Run one experiment in oracle-importance mode.
    Oracle,
    /// Write area, KL and t-test tables for a suite directory.
    Analyze {
        dir: PathBuf,
        /// Gaussian smoothing width of the KL histograms, in bins.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Write per-strategy mean learning curves of an analyzed suite.
    Report { dir: PathBuf },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let (rest, overrides) = match config::extract_overrides(args) {
        Ok(split) => split,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(&cli, &overrides) {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> i32 {
    eprintln!("gauss: {e}");
    e.exit_code()
}
