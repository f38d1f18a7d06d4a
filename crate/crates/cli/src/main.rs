//! `sqd`: simulate climbs, extract orientation features and evaluate the
//! lowering classifier from the command line.

mod commands;
mod config;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "sqd", version, about = "Smart-quickdraw lowering detection pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Base seed (scenario seed for `simulate`, fold seed for `evaluate`)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML config file; flags given on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: out/<subcommand>]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate labeled synthetic climbs and run them through the sensor emulator
    Simulate(SimulateArgs),
    /// Orientation traces, lowering-duration histograms and window features
    Extract(ExtractArgs),
    /// Cross-validated window-length sweep of the decision tree
    Evaluate(EvaluateArgs),
    /// Summarize an `evaluate` output directory
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario script (key = value format); the built-in default otherwise
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Number of climbs [default: 48]
    #[arg(long)]
    pub n: Option<usize>,
    /// Relative per-climb jitter of phase durations and intensities, in [0, 1) [default: 0.2]
    #[arg(long)]
    pub jitter: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus file written by `simulate`
    pub corpus: PathBuf,
    /// Samples per resampled climb [default: 360]
    #[arg(long)]
    pub target_len: Option<usize>,
    /// Nominal climb duration after resampling, seconds [default: 60]
    #[arg(long)]
    pub target_duration: Option<f64>,
    /// Window length of the exported feature table [default: 45]
    #[arg(long)]
    pub window_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Corpus file, or a features CSV written by `extract`
    pub input: PathBuf,
    /// Window lengths: `start..end:step`, `start..end` or `a,b,c` [default: 5..60:5]
    #[arg(long, value_parser = config::parse_length_arg)]
    pub lengths: Option<config::Lengths>,
    /// Window length of a features CSV input [default: 45]
    #[arg(long)]
    pub window_len: Option<usize>,
    /// Cross-validation folds [default: 10]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Cross-validation repetitions [default: 3]
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Keep all windows of a climb in one fold
    #[arg(long)]
    pub group_by_climb: bool,
    /// Maximum tree depth [default: 8]
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Samples per resampled climb [default: 360]
    #[arg(long)]
    pub target_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of an `evaluate` run
    pub run: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(&cli.common, a),
        Command::Extract(a) => commands::extract(&cli.common, a),
        Command::Evaluate(a) => commands::evaluate(&cli.common, a),
        Command::Report(a) => commands::report(&cli.common, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}
