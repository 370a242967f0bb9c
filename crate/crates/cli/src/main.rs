use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schur_cli::commands::{cmd_baselines, cmd_estimate, cmd_plot, cmd_sweep};
use schur_cli::config::RunConfig;
use schur_cli::CliError;

/// Schur-type norm bounds for delay transfer-operator kernels.
#[derive(Debug, Parser)]
#[command(name = "schur", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize the bound at a single frequency from a cold start.
    Estimate {
        /// Run configuration (.toml or .json).
        #[arg(long)]
        config: PathBuf,
        /// Frequency to estimate at.
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        /// Override the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the configured initialization seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Walk the frequency lattice in ascending order with warm starts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Skip frequencies already present in the sweep CSV.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emit the frequency-independent reference norms as JSON.
    Baselines {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render SVG charts from completed sweep outputs.
    Plot {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(
    path: &PathBuf,
    output: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = output {
        cfg.output_dir = dir;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate { config, omega, output, seed } => {
            let cfg = load_config(&config, output, seed)?;
            cmd_estimate(&cfg, omega)
        }
        Command::Sweep { config, resume, output, seed } => {
            let cfg = load_config(&config, output, seed)?;
            cmd_sweep(&cfg, resume)
        }
        Command::Baselines { config, output } => {
            let cfg = load_config(&config, output, None)?;
            cmd_baselines(&cfg)
        }
        Command::Plot { config, output } => {
            let cfg = load_config(&config, output, None)?;
            cmd_plot(&cfg)
        }
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
