//! `simplex-avg`: experiments on spherical, simplex and bilinear spherical
//! averages. Each subcommand resolves its configuration (defaults, then
//! `--config`, then flags), writes `config.resolved.json`, `report.json` and
//! `data/*.csv` under `--out`, prints a verdict, and exits 0 when every
//! threshold holds, 1 when one fails, 2 on a configuration or runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod output;

use commands::{adjoint, cube, frames, haar, l1, majorize, norm, pushforward, ratios, region, simplex, Verdict};
use config::{config_hash, resolve, ExperimentConfig};
use error::{CliError, CliResult};
use output::Sink;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "SIMPLEX_AVG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "simplex-avg", version, about = "Monte Carlo experiments on simplex averaging operators")]
pub struct Cli {
    /// JSON file with configuration keys; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for `report.json`, `config.resolved.json` and `data/`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment tests for Haar rotations and sphere points.
    HaarTest(haar::Args),
    /// Gram residuals of the regular simplex vertices.
    SimplexCheck(simplex::Args),
    /// Histogram of |a - b| on the sphere against the radial density.
    PushforwardCheck(pushforward::Args),
    /// ||T(1_E, 1_F)||_1 against <1_E, S^1 1_F>.
    L1Identity(l1::Args),
    /// Cauchy-Schwarz majorization and sup-ratio stability.
    MajorizeCheck(majorize::Args),
    /// Membership in the L^p x L^q -> L^1 region of T.
    Region(region::Args),
    /// Restricted strong-type ratios over a set family.
    VerifyRatios(ratios::Args),
    /// Measured quasi-norm against the unit-cube assembly.
    CubeBound(cube::Args),
    /// <T(f,g), h> = <f, T(g,h)> on random triples.
    AdjointCheck(adjoint::Args),
    /// Frame selection on Haar-random tuples.
    FramesCheck(frames::Args),
    /// Lower bound for an operator norm.
    EstimateNorm(norm::Args),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::HaarTest(_) => "haar-test",
            Command::SimplexCheck(_) => "simplex-check",
            Command::PushforwardCheck(_) => "pushforward-check",
            Command::L1Identity(_) => "l1-identity",
            Command::MajorizeCheck(_) => "majorize-check",
            Command::Region(_) => "region",
            Command::VerifyRatios(_) => "verify-ratios",
            Command::CubeBound(_) => "cube-bound",
            Command::AdjointCheck(_) => "adjoint-check",
            Command::FramesCheck(_) => "frames-check",
            Command::EstimateNorm(_) => "estimate-norm",
        }
    }
}

fn execute<C, F>(
    name: &str,
    file: Option<&Path>,
    out: Option<&Path>,
    flags: &F,
    body: fn(&C, &Sink) -> CliResult<Verdict>,
) -> CliResult<Verdict>
where
    C: ExperimentConfig,
    F: serde::Serialize,
{
    let cfg: C = resolve(file, flags)?;
    let hash = config_hash(name, &cfg)?;
    let sink = Sink::new(out, name, hash, cfg.seed())?;
    sink.write_config(&cfg)?;
    body(&cfg, &sink)
}

fn dispatch(cli: &Cli) -> CliResult<Verdict> {
    let name = cli.command.name();
    let file = cli.config.as_deref();
    let out = cli.out.as_deref();
    match &cli.command {
        Command::HaarTest(a) => execute(name, file, out, a, haar::run),
        Command::SimplexCheck(a) => execute(name, file, out, a, simplex::run),
        Command::PushforwardCheck(a) => execute(name, file, out, a, pushforward::run),
        Command::L1Identity(a) => execute(name, file, out, a, l1::run),
        Command::MajorizeCheck(a) => execute(name, file, out, a, majorize::run),
        Command::Region(a) => execute(name, file, out, a, region::run),
        Command::VerifyRatios(a) => execute(name, file, out, a, ratios::run),
        Command::CubeBound(a) => execute(name, file, out, a, cube::run),
        Command::AdjointCheck(a) => execute(name, file, out, a, adjoint::run),
        Command::FramesCheck(a) => execute(name, file, out, a, frames::run),
        Command::EstimateNorm(a) => execute(name, file, out, a, norm::run),
    }
}

/// Runs a parsed command on a pool of `--threads` workers.
pub fn run(cli: &Cli) -> CliResult<Verdict> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

/// Parses `args`, runs the command, prints the verdict and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(v) => {
            for line in &v.lines {
                println!("{line}");
            }
            if v.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
