//! Batch front-end: runs one command from a JSON experiment config and
//! writes CSV/JSON artifacts to the output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use shadowing_cli::commands;
use shadowing_cli::config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "shadowing-cli",
    about = "Construct, certify, and falsify shadowing trajectories of dynamical semigroups"
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long)]
    out: PathBuf,

    /// Overrides the config's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the config's command.
    #[arg(long)]
    command: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match commands::run_command(&config, &cli.out, cli.seed, cli.command.as_deref()) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
