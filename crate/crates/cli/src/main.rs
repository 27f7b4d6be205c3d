use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "conewave", version, about = "Dyadic cone decompositions, norms, Picard solves and estimate checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir` and CONEWAVE_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random ensemble (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Coefficient mass per shell, modulation band and sector.
    Decompose,
    /// Dyadic norm table of the input field.
    Norms,
    /// Picard iteration from the configured Cauchy data.
    Solve,
    /// Solve, then extract the asymptotic free data.
    Scatter,
    /// Run the configured estimate checks.
    Verify,
    /// Closed-form checks on an n = 2 grid.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Norms => "norms",
            Command::Solve => "solve",
            Command::Scatter => "scatter",
            Command::Verify => "verify",
            Command::Selftest => "selftest",
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(dir) = cli.out.clone().or_else(|| std::env::var_os("CONEWAVE_OUT").map(PathBuf::from)) {
        cfg.output.dir = dir;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("--threads")?;
    }
    let name = cli.command.name();
    let dir = cfg.output.dir.clone();
    let mut out = report::Writer::new(&dir, &cfg, name)?;
    let outcome = match cli.command {
        Command::Decompose => commands::decompose(&cfg, &mut out),
        Command::Norms => commands::norms(&cfg, &mut out),
        Command::Solve => commands::solve(&cfg, &mut out),
        Command::Scatter => commands::scatter(&cfg, &mut out),
        Command::Verify => commands::verify(&cfg, &mut out),
        Command::Selftest => commands::selftest(&cfg, &mut out),
    }?;
    for p in &out.written {
        println!("{}", p.display());
    }
    for p in &outcome.failed {
        eprintln!("FAILED {}", p.display());
    }
    Ok(outcome.failed.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
