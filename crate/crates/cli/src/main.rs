//! `hab`: command-line runner for the averaging identities.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_signature, Format, Overrides, RunConfig};
use crate::output::Emitter;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Core(hab_core::Error),
}

impl From<hab_core::Error> for CliError {
    fn from(e: hab_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(s) => f.write_str(s),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Parser)]
#[command(name = "hab", version, about = "Averaging identities for pseudo-unitary and hermitian-symplectic cocycles")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gate tolerance for reported gaps (default 1e-8).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Signature `c,d` of U(c,d).
    #[arg(long, global = true, value_parser = parse_signature)]
    sig: Option<hab_core::group::Signature>,
    /// Matrix JSON file for the product family (repeatable).
    #[arg(long = "matrix", global = true)]
    matrices: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Membership defect of a matrix against the certification threshold.
    Check {
        file: PathBuf,
        /// Check against HSp(2d) instead of U(c,d).
        #[arg(long)]
        hsp: Option<usize>,
    },
    /// Hyperbolic decomposition of a U(c,d) matrix.
    Decompose { file: PathBuf },
    /// N_r of a matrix (r defaults to d).
    Nfun {
        file: PathBuf,
        #[arg(long)]
        r: Option<usize>,
    },
    /// θ-integrals of a finite product against Σ N_d.
    ProductIdentity,
    /// Circle mean inside the disk and fixed-point determinants.
    MeanValue,
    /// Sum of the top k Lyapunov exponents of a cocycle.
    Lyapunov,
    /// θ-averaged Lyapunov sums against ∫ N_d dμ.
    HabSweep,
    /// Transfer-matrix cocycle of a strip Schrödinger operator.
    Schrodinger,
    /// Random group elements written as matrix JSON files.
    Sample,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Decompose { .. } => "decompose",
            Command::Nfun { .. } => "nfun",
            Command::ProductIdentity => "product_identity",
            Command::MeanValue => "mean_value",
            Command::Lyapunov => "lyapunov",
            Command::HabSweep => "hab_sweep",
            Command::Schrodinger => "schrodinger",
            Command::Sample => "sample",
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    threads: usize,
    elapsed_ms: u128,
    outcome: Option<Outcome>,
    error: Option<String>,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let common = cli.common;
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(Overrides {
        seed: common.seed,
        signature: common.sig,
        output_dir: common.out,
        format: common.format,
        tol: common.tol,
        matrices: common.matrices,
    });
    if common.dry_run {
        println!("command = \"{}\"", cli.command.name());
        print!("{}", toml::to_string(&cfg).map_err(|e| CliError::Invalid(e.to_string()))?);
        return Ok(Outcome::Pass);
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    if !matches!(cli.command, Command::Check { .. } | Command::Decompose { .. } | Command::Nfun { .. }) {
        cfg.seed()?;
    }
    let out = Emitter::new(&cfg.output_dir(), cfg.format())?;
    let start = Instant::now();
    let result = match &cli.command {
        Command::Check { file, hsp } => commands::check(file, *hsp, &cfg, &out),
        Command::Decompose { file } => commands::decompose(file, &cfg, &out),
        Command::Nfun { file, r } => commands::nfun(file, *r, &cfg, &out),
        Command::ProductIdentity => commands::product_identity_cmd(&cfg, &out),
        Command::MeanValue => commands::mean_value(&cfg, &out),
        Command::Lyapunov => commands::lyapunov(&cfg, &out),
        Command::HabSweep => commands::hab_sweep_cmd(&cfg, &out),
        Command::Schrodinger => commands::schrodinger(&cfg, &out),
        Command::Sample => commands::sample(&cfg, &out),
    };
    let meta = Metadata {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        elapsed_ms: start.elapsed().as_millis(),
        outcome: result.as_ref().ok().copied(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    out.always_json(&format!("{}.meta.json", cli.command.name()), &meta)?;
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
