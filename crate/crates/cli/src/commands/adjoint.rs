//! `⟨T(f, g), h⟩ = ⟨f, T(g, h)⟩` on random nonnegative triples.

use serde::{Deserialize, Serialize};
use simplex_core::operators::{adjoint_residual, AdjointResidual, McConfig};
use simplex_core::rng::{derive_seed, stream, tag};
use simplex_core::{Grid, GridFunction};

use super::{parse_real, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::inputs::smooth_bumps;
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Joint `(x, R)` draws per trial.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub d: usize,
    pub trials: usize,
    pub samples: usize,
    pub sigma: f64,
    pub h: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 2,
            trials: 50,
            samples: 1_000_000,
            sigma: 3.0,
            h: 1.0 / 16.0,
            seed: 1,
        }
    }
}

impl ExperimentConfig for Config {
    fn seed(&self) -> u64 {
        self.seed
    }
}

const BOX: f64 = 2.5;

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    if cfg.d < 2 {
        return Err(CliError::config("the triangle operator needs d >= 2"));
    }
    let grid = Grid::new(vec![-BOX; cfg.d], vec![BOX; cfg.d], cfg.h)?;
    let mut results: Vec<AdjointResidual> = Vec::with_capacity(cfg.trials);
    let mut rows = Vec::with_capacity(cfg.trials);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in 0..cfg.trials {
        let mut rng = stream(cfg.seed, tag::INPUTS, t as u64);
        let fs: Vec<GridFunction> = (0..3).map(|_| smooth_bumps(&grid, &mut rng)).collect();
        let mc = McConfig::new(cfg.samples, derive_seed(cfg.seed, tag::ADJOINT, t as u64));
        let r = adjoint_residual(&fs[0], &fs[1], &fs[2], &mc)?;
        let ok = r.residual == 0.0 || r.residual < cfg.sigma * r.stderr;
        failures += !ok as usize;
        if r.stderr > 0.0 {
            worst = worst.max(r.residual / r.stderr);
        }
        rows.push(vec![
            t.to_string(),
            num(r.lhs.value),
            num(r.rhs.value),
            num(r.residual),
            num(r.stderr),
            ok.to_string(),
        ]);
        results.push(r);
    }
    let pass = failures == 0;
    sink.write_csv("residuals.csv", &["trial", "lhs", "rhs", "residual", "stderr", "pass"], &rows)?;
    sink.write_report(
        pass,
        &serde_json::json!({ "failures": failures, "worst_residual_in_stderr": worst, "trials": results }),
    )?;
    Ok(Verdict {
        pass,
        lines: vec![
            format!(
                "{} triples, {failures} with residual >= {}·stderr; worst {worst:.2} stderr",
                cfg.trials, cfg.sigma
            ),
            format!("adjoint-check: {}", pass_word(pass)),
        ],
    })
}
