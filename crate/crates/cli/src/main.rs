//! Batch front-end for the specdet library: config-driven detection runs,
//! theory-vs-Monte-Carlo validation tables, ROC curves, false-alarm
//! frequency histograms and threshold calibration, all emitted as CSV.

mod commands;
mod config;
mod error;
mod output;
mod series;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliResult;

#[derive(Parser)]
#[command(
    name = "specdet",
    version,
    about = "Sinusoid detection in colored noise via training-set standardized periodograms",
    after_help = "Exit codes: 0 ok, 1 unexpected i/o, 2 configuration error, 3 ingestion error, 4 numeric failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score the configured tests on one observation and emit detect.csv
    Detect(CommonArgs),
    /// Tabulate analytic vs Monte Carlo rates into validate.csv
    Validate(CommonArgs),
    /// Emit analytic and empirical ROC curves into roc.csv
    Roc(CommonArgs),
    /// Histogram each test's dominant frequency under the null into histogram.csv
    Histogram(CommonArgs),
    /// Calibrate thresholds at target false-alarm rates into calibrate.csv
    Calibrate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 keeps one per core
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(command: &Command) -> CliResult<()> {
    let args = match command {
        Command::Detect(a)
        | Command::Validate(a)
        | Command::Roc(a)
        | Command::Histogram(a)
        | Command::Calibrate(a) => a,
    };
    specdet::configure_threads(args.threads).map_err(|e| error::CliError::Config(e.to_string()))?;
    let cfg = ExperimentConfig::load(&args.config)?;
    let out_dir = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match command {
        Command::Detect(_) => commands::cmd_detect(&cfg, args.seed, &out_dir),
        Command::Validate(_) => commands::cmd_validate(&cfg, args.seed, &out_dir),
        Command::Roc(_) => commands::cmd_roc(&cfg, args.seed, &out_dir),
        Command::Histogram(_) => commands::cmd_histogram(&cfg, args.seed, &out_dir),
        Command::Calibrate(_) => commands::cmd_calibrate(&cfg, args.seed, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("specdet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
