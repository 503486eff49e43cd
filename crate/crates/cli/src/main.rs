//! `lyaplab`: run experiments described by TOML configs and emit TOML run
//! records.
//!
//! Exit status: 0 pass, 1 runtime error, 2 a checked statement failed,
//! 3 its hypotheses were refused, 4 usage or config error.

mod config;
mod ops;
mod record;
mod suite;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lyapunov_lab::CheckStatus;

use config::{ExperimentConfig, UsageError};
use record::{RunRecord, ARTIFACT};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FAIL: u8 = 2;
pub const EXIT_REFUSED: u8 = 3;
pub const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "lyaplab", version, about = "Numerical lab for linear cocycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Where to write the run record; stdout when absent and the config
    /// names no output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct SuiteArgs {
    /// Directory of configs; every `*.toml` in it is run in name order.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the run records.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov spectrum along sampled orbits.
    Lyapunov(RunArgs),
    /// Dominated-splitting detector.
    Dominate(RunArgs),
    /// Cone-field verification and κ.
    Cones(RunArgs),
    /// Almost-additivity constant κ.
    Kappa(RunArgs),
    /// Empirical measures of sampled orbits.
    Empirical(RunArgs),
    /// Observable-measure candidates and physical classification.
    Observables(RunArgs),
    /// Ergodic optimization of the top exponent.
    Ergopt(RunArgs),
    /// Ess-sup-limsup versus observable measures versus limsup-ess-sup.
    #[command(name = "theorem-4-1")]
    Theorem41(RunArgs),
    /// Search for block expansion constants (λ, K).
    #[command(name = "theorem-a")]
    TheoremA(RunArgs),
    /// Ess-sup, observable and physical suprema of the top exponent.
    #[command(name = "corollary-6-2")]
    Corollary62(RunArgs),
    /// Exterior-power growth bound on topological entropy.
    Entropy(RunArgs),
    /// Run a directory of configs and summarize.
    Suite(SuiteArgs),
}

pub fn exit_code(status: &CheckStatus) -> u8 {
    match status {
        CheckStatus::Pass => EXIT_PASS,
        CheckStatus::Fail(_) => EXIT_FAIL,
        CheckStatus::Refused(_) => EXIT_REFUSED,
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_ERROR
    }
}

fn set_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(UsageError("--threads must be ≥ 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    Ok(())
}

/// Load, run and record one config. `operation` is the subcommand, if any.
pub fn run_config(path: &Path, operation: Option<&str>, seed: Option<u64>) -> anyhow::Result<RunRecord> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let op = cfg.resolve_operation(operation)?;
    cfg.operation = Some(op.clone());
    let start = Instant::now();
    let result = ops::run(&op, &cfg)?;
    Ok(RunRecord {
        artifact: ARTIFACT.to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: cfg,
        results: vec![result],
    })
}

fn single(operation: &str, args: &RunArgs) -> anyhow::Result<u8> {
    set_threads(args.threads)?;
    let record = run_config(&args.config, Some(operation), args.seed)?;
    let text = record.to_toml()?;
    match args.out.as_ref().or(record.config.output.as_ref()) {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    let status = record.results[0].check_status();
    if let CheckStatus::Fail(r) | CheckStatus::Refused(r) = &status {
        eprintln!("{operation}: {}: {r}", status.label());
    }
    Ok(exit_code(&status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    let outcome = match &cli.command {
        Command::Suite(args) => set_threads(args.threads).and_then(|_| suite::run(&args.config, args.out.as_deref(), args.seed)),
        Command::Lyapunov(a) => single("lyapunov", a),
        Command::Dominate(a) => single("dominate", a),
        Command::Cones(a) => single("cones", a),
        Command::Kappa(a) => single("kappa", a),
        Command::Empirical(a) => single("empirical", a),
        Command::Observables(a) => single("observables", a),
        Command::Ergopt(a) => single("ergopt", a),
        Command::Theorem41(a) => single("theorem-4-1", a),
        Command::TheoremA(a) => single("theorem-a", a),
        Command::Corollary62(a) => single("corollary-6-2", a),
        Command::Entropy(a) => single("entropy", a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
