//! Gram residuals of the regular simplices, before and after a rotation.

use serde::{Deserialize, Serialize};
use simplex_core::geometry::{regular_simplex_vertices, sample_rotation, SimplexConfig};
use simplex_core::rng::{stream, tag};

use super::{pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    /// Largest ambient dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_max: Option<usize>,
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
    pub d_max: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d_max: 8,
            tolerance: 1e-12,
            seed: 1,
        }
    }
}

impl ExperimentConfig for Config {
    fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GramRow {
    pub d: usize,
    pub k: usize,
    pub gram_residual: f64,
    pub rotated_residual: f64,
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    if cfg.d_max < 1 {
        return Err(CliError::config("d_max must be at least 1"));
    }
    let mut rows = Vec::new();
    for d in 1..=cfg.d_max {
        for k in 1..=d {
            let s = regular_simplex_vertices(d, k)?;
            let mut rng = stream(cfg.seed, tag::ROTATION, (d * 64 + k) as u64);
            let r = sample_rotation(d, &mut rng)?;
            let rotated = SimplexConfig {
                vertices: s.vertices.iter().map(|v| r.apply(v)).collect(),
                ..s.clone()
            };
            rows.push(GramRow {
                d,
                k,
                gram_residual: s.gram_residual(),
                rotated_residual: rotated.gram_residual(),
            });
        }
    }
    let worst = rows.iter().map(|r| r.gram_residual.max(r.rotated_residual)).fold(0.0, f64::max);
    let pass = worst < cfg.tolerance;
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.d.to_string(), r.k.to_string(), num(r.gram_residual), num(r.rotated_residual)])
        .collect();
    sink.write_csv("gram.csv", &["d", "k", "gram_residual", "rotated_residual"], &csv)?;
    sink.write_report(
        pass,
        &serde_json::json!({ "max_residual": worst, "tolerance": cfg.tolerance, "cases": rows }),
    )?;
    Ok(Verdict {
        pass,
        lines: vec![format!(
            "simplex-check: {} cases (1 <= k <= d <= {}), max Gram residual {:.3e} (tolerance {:.0e}) {}",
            rows.len(),
            cfg.d_max,
            worst,
            cfg.tolerance,
            pass_word(pass)
        )],
    })
}
