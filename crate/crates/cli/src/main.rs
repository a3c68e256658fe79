//! `fockshell` command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on a
//! usage or configuration error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use report::Sink;

#[derive(Debug, Parser)]
#[command(name = "fockshell", version, about = "Pairing-model verification, spectra and mean-field magnetization")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`; default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Nullification, commutator, quantum-number and ground-level checks.
    Verify,
    /// Sector spectrum with level multiplicities.
    Spectrum,
    /// Spontaneous magnetization curve I(T).
    Magnetize,
    /// Applicability criteria for one parameter set.
    Criteria,
    /// Criterion map over G_ss and the layer half-width.
    Sweep,
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let loaded = config::load(path).map_err(Failure::Config)?;
    let cfg = &loaded.config;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let sink = Sink::new(dir, cfg.output.prefix.clone(), loaded.sha256.clone())?;
    log::info!("config {} (sha256 {})", path.display(), loaded.sha256);
    match cli.command {
        Command::Verify => commands::verify(cfg, &sink),
        Command::Spectrum => commands::spectrum(cfg, &sink),
        Command::Magnetize => commands::magnetize(cfg, &sink),
        Command::Criteria => commands::criteria(cfg, &sink),
        Command::Sweep => commands::sweep(cfg, &sink),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
