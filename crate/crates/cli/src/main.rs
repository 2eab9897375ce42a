//! `cclab`: capacity bounds, contents, seminorm estimates and potential
//! dumps for corner Cantor sets.
//!
//! Exit status 0 on success, 1 on engine errors, 2 on configuration errors.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FileConfig, Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Engine(String),
}

impl From<cclab_core::Error> for CliError {
    fn from(e: cclab_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Engine(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cclab", version, about = "Numeric (1/2,+)-caloric capacity of corner Cantor sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON run configuration (chosen by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Constant contraction factor, 0 < λ < 1/2.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Relative tolerance; defaults depend on the command and depth.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Replaces the configured seed list by a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the worker threads of the engine.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Lower and upper capacity bounds for k = kmin..=kmax.
    Capacity,
    /// Hausdorff content bracket of E_k.
    Content,
    /// BMO estimate of P∗μ for the Frostman-rescaled μ_kmax.
    Bmo,
    /// Lip_α estimate of P∗μ for the (n+α)-rescaled μ_kmax.
    Lip,
    /// Sup-potential of discretized segments as the atom count grows.
    SegmentDemo,
    /// Potential of μ_kmax on a grid of (x_1, t).
    PotentialField,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        n: cli.n,
        lambda: cli.lambda,
        kmax: cli.kmax,
        tol: cli.tol,
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out.clone(),
    };
    let cfg = RunConfig::resolve(file, flags)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Engine(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Capacity => commands::capacity(&cfg),
        Command::Content => commands::content(&cfg),
        Command::Bmo => commands::bmo(&cfg),
        Command::Lip => commands::lip(&cfg),
        Command::SegmentDemo => commands::segment_demo(&cfg),
        Command::PotentialField => commands::potential_field(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("cclab: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Engine(msg)) => {
            eprintln!("cclab: {msg}");
            ExitCode::from(1)
        }
    }
}
