use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sirb_core::config::{parse_config, Mode, RunConfig};
use sirb_core::diagnostics::{validate_ladder, Regime};

#[derive(Parser)]
#[command(name = "sirb", version, about = "Spatial stochastic SIRB simulator on a periodic lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stochastic replicas of the counting process
    Simulate(Args),
    /// Deterministic lattice system
    Pde(Args),
    /// Spatially homogeneous ODE
    Homogeneous(Args),
    /// Large-population convergence along a ladder of scalings
    Converge(Args),
    /// Martingale and compensator diagnostics
    Diagnose(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration; defaults are used when absent
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convergence regime (converge only): theorem1 or theorem2
    #[arg(long)]
    mode: Option<Regime>,
}

fn load(mode: Mode, args: Args) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => parse_config(path).with_context(|| format!("reading {}", path.display()))?,
        None => RunConfig::default(),
    };
    config.mode = mode;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(r) = args.replicas {
        if r == 0 {
            bail!("--replicas must be at least 1");
        }
        config.replicas = r;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(out) = args.out {
        config.output = out;
    }
    if let Some(regime) = args.mode {
        if mode != Mode::Converge {
            bail!("--mode only applies to the converge subcommand");
        }
        validate_ladder(&config.converge.ladder, regime)?;
        config.converge.regime = regime;
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Pde(a) => (Mode::Pde, a),
        Command::Homogeneous(a) => (Mode::Homogeneous, a),
        Command::Converge(a) => (Mode::Converge, a),
        Command::Diagnose(a) => (Mode::Diagnose, a),
    };
    match load(mode, args).and_then(|c| sirb_cli::run(&c)) {
        Ok(summary) => {
            log::info!("wrote {} files to {}", summary.files.len() + 1, summary.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
