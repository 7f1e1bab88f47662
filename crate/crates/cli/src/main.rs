//! `mvad`: fit, score and benchmark the multi-view anomaly detector.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunConfig, Settings};
use error::CliError;

#[derive(Parser)]
#[command(name = "mvad", version, about = "Multi-view anomaly detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat TOML file whose keys mirror the flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic (or split LIBSVM) dataset to dataset.json.
    Generate,
    /// Fit the model; writes model.json and trace.json.
    Fit,
    /// Anomaly scores from a trace; writes scores.csv.
    Score,
    /// Fill missing cells; writes imputed.json.
    Impute,
    /// Choose the latent dimensionality by held-out imputation error.
    SelectK,
    /// Multi-seed experiment; writes report.csv and report.json.
    Benchmark,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let run = RunConfig::resolve(cli.settings, cli.config.as_deref())?;
    match cli.command {
        Command::Generate => commands::generate(&run),
        Command::Fit => commands::fit(&run),
        Command::Score => commands::score(&run),
        Command::Impute => commands::impute(&run),
        Command::SelectK => commands::select_k(&run),
        Command::Benchmark => commands::benchmark(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
