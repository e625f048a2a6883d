//! Lower bound for an operator norm by alternating ascent, optionally
//! checked against a known value.

use serde::{Deserialize, Serialize};
use simplex_core::exponents::ExponentTuple;
use simplex_core::extremizer::{estimate_norm_with, ExtremizerConfig, InputGrid};
use simplex_core::operators::{McConfig, OperatorKind};

use super::{parse_real, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// `p_1,…,p_k,r` as exact rationals (`inf` allowed).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<String>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Known norm to compare against.
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
    /// Relative tolerance for `--expect`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub op: String,
    pub d: usize,
    pub exponents: String,
    pub h: f64,
    pub half_width: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub samples: usize,
    pub expect: Option<f64>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            op: "T".into(),
            d: 2,
            exponents: "inf,inf,inf".into(),
            h: 1.0 / 16.0,
            half_width: 1.5,
            iterations: 50,
            restarts: 4,
            samples: 1024,
            expect: None,
            tolerance: 0.02,
            seed: 1,
        }
    }
}

impl ExperimentConfig for Config {
    fn seed(&self) -> u64 {
        self.seed
    }
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    let op: OperatorKind = cfg.op.parse()?;
    let e = ExponentTuple::parse_list(&cfg.exponents)?;
    let grid = InputGrid::new(cfg.d, cfg.half_width, cfg.h)?;
    let ext = ExtremizerConfig {
        iterations: cfg.iterations,
        restarts: cfg.restarts,
        mc: McConfig::new(cfg.samples, cfg.seed),
        ..ExtremizerConfig::default()
    };
    let est = estimate_norm_with(op, &e, &grid, &ext)?;
    let rows: Vec<Vec<String>> = est
        .restarts
        .iter()
        .flat_map(|t| {
            t.history
                .iter()
                .zip(&t.stderr)
                .enumerate()
                .map(move |(i, (v, se))| vec![t.restart.to_string(), i.to_string(), num(*v), num(*se)])
        })
        .collect();
    sink.write_csv("history.csv", &["restart", "iteration", "objective", "stderr"], &rows)?;

    let relative_error = cfg.expect.map(|x| (est.lower_bound - x).abs() / x.abs());
    let pass = relative_error.is_none_or(|r| r < cfg.tolerance);
    sink.write_report(pass, &serde_json::json!({ "estimate": est, "expect": cfg.expect, "relative_error": relative_error }))?;
    let best = &est.restarts[est.best_restart];
    let mut lines = vec![format!(
        "{op} {e} on [-{hw}, {hw}]^{d}, h = {h}: lower bound {:.6} (restart {}, {} iterations, {:?})",
        est.lower_bound,
        est.best_restart,
        best.history.len().saturating_sub(1),
        est.method,
        hw = cfg.half_width,
        d = cfg.d,
        h = cfg.h
    )];
    if let (Some(x), Some(r)) = (cfg.expect, relative_error) {
        lines.push(format!("expected {x}, relative error {r:.2e} (< {}) {}", cfg.tolerance, pass_word(pass)));
    }
    lines.push(format!("estimate-norm: {}", pass_word(pass)));
    Ok(Verdict { pass, lines })
}
