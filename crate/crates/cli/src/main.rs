//! `tcrystal` — configuration-driven experiment runner.
//!
//! Subcommands:
//! - `run --config <file> [--seed N] [--out DIR] [--workers K]` executes an
//!   experiment and writes CSV data plus a JSON manifest.
//! - `validate --config <file>` checks a config and prints warnings.
//!
//! Exit codes: 0 success, 2 invalid configuration or usage, 3 runtime
//! (numerical or I/O) failure.

mod config;
mod output;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

/// Environment variable overriding the output directory (lower precedence
/// than `--out`, higher than the config file).
const OUT_ENV_VAR: &str = "TCRYSTAL_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Configuration problems: parse failures, schema violations, impossible
    /// parameter combinations. Exit code 2.
    #[error("{0}")]
    Config(String),
    /// Failures while computing: numerical breakdowns, dimension conflicts
    /// discovered mid-run. Exit code 3.
    #[error("{0}")]
    Runtime(String),
    /// Failures while writing results. Exit code 3.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<tcrystal_core::Error> for CliError {
    fn from(e: tcrystal_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "tcrystal",
    version,
    about = "Simulation and verification toolkit for emergent time periodicity in few-qubit open systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment configuration and write its data files.
    Run {
        /// Path to a TOML experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the configuration's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides TCRYSTAL_OUT and the config file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep experiments (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and validate a configuration, reporting warnings.
    Validate {
        /// Path to a TOML experiment configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out, workers } => run(&config, seed, out, workers),
        Command::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn validate(path: &PathBuf) -> Result<(), CliError> {
    let cfg = config::load(path)?;
    let warnings = cfg.validate()?;
    for w in &warnings {
        println!("warning: {w}");
    }
    println!(
        "ok: {} is a valid {} configuration ({} warning(s))",
        path.display(),
        cfg.experiment.as_str(),
        warnings.len()
    );
    Ok(())
}

fn run(
    path: &PathBuf,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let cfg = config::load(path)?;
    let warnings = cfg.validate()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let seed = seed_flag.unwrap_or(cfg.seed);
    let out_dir = resolve_out_dir(&cfg, out_flag);

    let started = Instant::now();
    let outcome = match workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| runner::execute(&cfg, seed))?
        }
        None => runner::execute(&cfg, seed)?,
    };
    let wall_time_s = started.elapsed().as_secs_f64();

    let written = output::write_all(&out_dir, &cfg, seed, &warnings, &outcome.files, wall_time_s)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn resolve_out_dir(cfg: &config::ExperimentConfig, out_flag: Option<PathBuf>) -> PathBuf {
    if let Some(dir) = out_flag {
        return dir;
    }
    if let Ok(dir) = std::env::var(OUT_ENV_VAR) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    if let Some(dir) = cfg.output.as_ref().and_then(|o| o.dir.clone()) {
        return PathBuf::from(dir);
    }
    PathBuf::from("tcrystal_out").join(cfg.experiment.as_str())
}
