//! Histogram of `|a − b|` for `(a, b)` uniform on `S^{2d−1}` against the
//! closed-form radial law.

use serde::{Deserialize, Serialize};
use simplex_core::exec::Execution;
use simplex_core::operators::{
    empirical_difference_histogram, HistogramFit, PushforwardDensity, DIFFERENCE_SUPPORT, NOMINAL_SUPPORT,
};

use super::{pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, Sink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// `√2`, the largest attainable `|a − b|`.
    #[default]
    Confirmed,
    /// `2`, the radius of the unrescaled density formula.
    Nominal,
}

impl Support {
    pub fn radius(self) -> f64 {
        match self {
            Support::Confirmed => DIFFERENCE_SUPPORT,
            Support::Nominal => NOMINAL_SUPPORT,
        }
    }
}

pub const SUPPORT_NOTE: &str = "For (a, b) uniform on the unit sphere of R^{2d}, |a - b|^2 <= 2(|a|^2 + |b|^2) = 2, \
so a - b is supported in the ball of radius sqrt(2), not 2. The density of a - b is \
c (1 - |t|^2/rho^2)^{(d-2)/2} with rho = sqrt(2): the radius-2 formula rescaled to the attainable support.";

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Histogram range and model radius.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<Support>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sup_deviation: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_p_value: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub d: usize,
    pub samples: usize,
    pub bins: usize,
    pub support: Support,
    /// Bound on the largest bin density difference, measured with `|a − b|`
    /// rescaled to `[0, 2]`.
    pub max_sup_deviation: f64,
    pub min_p_value: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 2,
            samples: 1_000_000,
            bins: 40,
            support: Support::Confirmed,
            max_sup_deviation: 0.01,
            min_p_value: 0.001,
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
pub struct PushforwardReport {
    pub d: usize,
    pub support: f64,
    pub nominal_support: f64,
    pub max_observed: f64,
    pub overflow: u64,
    pub fit: HistogramFit,
    pub sup_pass: bool,
    pub p_value_pass: bool,
    pub support_note: &'static str,
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    let radius = cfg.support.radius();
    let hist = empirical_difference_histogram(cfg.d, cfg.samples, cfg.bins, radius, cfg.seed, Execution::Parallel)?;
    let model = PushforwardDensity::new(cfg.d, radius)?;
    let fit = hist.compare(&model);
    let sup_pass = fit.sup_deviation < cfg.max_sup_deviation;
    let p_value_pass = fit.p_value > cfg.min_p_value;
    let pass = sup_pass && p_value_pass;

    let probs = hist.model_probabilities(&model);
    let edges = hist.edges();
    let n = hist.n_samples as f64;
    let rows: Vec<Vec<String>> = (0..hist.bins())
        .map(|i| {
            vec![
                num(edges[i]),
                num(edges[i + 1]),
                hist.counts[i].to_string(),
                num(hist.counts[i] as f64 / n),
                num(probs[i]),
            ]
        })
        .collect();
    sink.write_csv(
        "histogram.csv",
        &["bin_lo", "bin_hi", "count", "empirical_probability", "model_probability"],
        &rows,
    )?;
    let report = PushforwardReport {
        d: cfg.d,
        support: radius,
        nominal_support: NOMINAL_SUPPORT,
        max_observed: hist.max_observed,
        overflow: hist.overflow,
        fit,
        sup_pass,
        p_value_pass,
        support_note: SUPPORT_NOTE,
    };
    sink.write_report(pass, &report)?;
    Ok(Verdict {
        pass,
        lines: vec![
            format!(
                "d={} samples={} bins={} support={:.6} (largest observed {:.6})",
                cfg.d, cfg.samples, cfg.bins, radius, hist.max_observed
            ),
            format!(
                "sup deviation {:.5} (< {}) {}; chi-square {:.2}, p = {:.4} (> {}) {}",
                fit.sup_deviation,
                cfg.max_sup_deviation,
                pass_word(sup_pass),
                fit.chi_square,
                fit.p_value,
                cfg.min_p_value,
                pass_word(p_value_pass)
            ),
            format!("pushforward-check: {}", pass_word(pass)),
        ],
    })
}
