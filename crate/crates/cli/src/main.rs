//! `dualmod`: config-driven runner for discrete modulus experiments.
//!
//! Exit status: 0 success, 2 config parse failure, 3 precondition failure,
//! 4 solver non-convergence, 5 I/O failure.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "dualmod", version, about = "Discrete curve/surface modulus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "DUALMOD_OUT_DIR", default_value = ".")]
        out: PathBuf,
        /// Threads for independent rows; 1 keeps runs bitwise reproducible.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        workers: u16,
        #[arg(long)]
        verbose: bool,
    },
    /// List domains, condensers, maps and commands.
    Presets,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

fn run(config: &Path, out: &Path, workers: usize, verbose: bool) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config).map_err(CliError::io(config))?;
    let cfg = ExperimentConfig::parse(&text)?;
    if verbose {
        eprintln!("{}: {} with {} worker(s)", config.display(), cfg.command.name(), workers);
    }
    let outcome = commands::run(&cfg, workers)?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let (csv, json) = (out.join(cfg.csv_name()), out.join(cfg.json_name()));
    write(&csv, &outcome.csv)?;
    write(&json, &outcome.json)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    if verbose {
        eprintln!("wrote {} and {}", csv.display(), json.display());
    }
    if outcome.capped {
        return Err(CliError::NotConverged("some rows stopped at the iteration cap".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run { config, out, workers, verbose } => run(&config, &out, usize::from(workers), verbose),
        Cmd::Presets => {
            print!("{}", commands::list_presets());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dualmod: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
