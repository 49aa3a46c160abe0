mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{ExportFormat, Status};
use config::RunConfig;

/// Steady exterior Navier-Stokes flows near Hamel-type reference flows.
#[derive(Parser)]
#[command(name = "hamel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Picard solve for phi0 > 2, circulation shooting otherwise.
    Solve(Common),
    /// Sweep `mu_list` with the same boundary data (phi0 > 2).
    Branch(Common),
    /// Circulation shooting (phi0 <= 2).
    Shoot(Common),
    /// Manufactured-solution oracles and inequality suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Reduced sample counts.
        #[arg(long)]
        quick: bool,
        /// Also search for a mode-one stream with negative Q1 at `--phi0` (default 3.2).
        #[arg(long)]
        probe_q1: bool,
    },
    /// Convert solve outputs to CSV or JSON tables.
    Export {
        /// Directory from a previous solve or export.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.phi0 = common.phi0.or(cfg.phi0);
    cfg.mu0 = common.mu0.or(cfg.mu0);
    cfg.mu = common.mu.or(cfg.mu);
    cfg.seed = common.seed.or(cfg.seed);
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.solver.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HAMEL_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("HAMEL_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("HAMEL_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    init_threads()?;
    match cli.command {
        Command::Solve(c) => commands::solve(&load(&c)?),
        Command::Branch(c) => commands::branch(&load(&c)?),
        Command::Shoot(c) => commands::shoot(&load(&c)?),
        Command::Verify {
            common,
            quick,
            probe_q1,
        } => {
            let cfg = load(&common)?;
            let probe = probe_q1.then(|| cfg.phi0.unwrap_or(3.2));
            commands::verify(&cfg, quick, probe)
        }
        Command::Export { input, format, out } => commands::export(&input, format, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Config as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Config as u8)
        }
    }
}
