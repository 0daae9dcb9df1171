mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::{parse_models, RunConfig};

/// Fits and evaluates space-time point-process models of wildfire
/// occurrence.
#[derive(Debug, Parser)]
#[command(name = "firehazard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated model ids, e.g. `1,2,8`.
    #[arg(long, global = true)]
    models: Option<String>,
    /// Exit with success even when a fit did not converge.
    #[arg(long, global = true)]
    allow_nonconverged: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate a synthetic catalog, station weather and burn history.
    Simulate,
    /// Fit each model by maximum likelihood.
    Fit,
    /// AIC table, ROC curves and residuals of fitted models.
    Evaluate,
    /// Collate fits and evaluation into a report.
    Report,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(m) = &cli.models {
        cfg.models = parse_models(m)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Fit => commands::fit(&cfg, cli.allow_nonconverged),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
