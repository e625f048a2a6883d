//! `‖T(1_E, 1_F)‖_{L^1}` computed twice: by integrating the operator output
//! and by the pairing `⟨1_E, S^1 1_F⟩`.

use serde::{Deserialize, Serialize};
use simplex_core::inequalities::indicator;
use simplex_core::operators::{apply_operator, l1_pairing, McConfig, McEstimate, OperatorKind};
use simplex_core::ShapeSet;

use super::{parse_real, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Radius of E = B(0, e_radius).
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_radius: Option<f64>,
    /// Radius of F = B(0, f_radius).
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_radius: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_relative_error: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub d: usize,
    pub e_radius: f64,
    pub f_radius: f64,
    pub h: f64,
    pub samples: usize,
    /// Agreement threshold in combined standard errors.
    pub sigma: f64,
    /// Allowed relative error of the pairing against `|E|` when
    /// `F ⊇ E + B(0, 1)`.
    pub max_relative_error: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 2,
            e_radius: 1.0,
            f_radius: 3.0,
            h: 1.0 / 64.0,
            samples: 4096,
            sigma: 3.0,
            max_relative_error: 0.02,
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
pub struct L1Report {
    pub operator_mass: McEstimate,
    pub pairing: McEstimate,
    pub combined_stderr: f64,
    pub z: f64,
    pub agreement_pass: bool,
    /// `|E|`, reported when every point of `E + B(0, 1)` lies in `F`.
    pub expected: Option<f64>,
    pub relative_error: Option<f64>,
    pub expected_pass: Option<bool>,
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    if cfg.d < 2 {
        return Err(CliError::config("the triangle operator needs d >= 2"));
    }
    let origin = vec![0.0; cfg.d];
    let e_set = ShapeSet::ball(origin.clone(), cfg.e_radius);
    let e = indicator(&e_set, cfg.h)?;
    let f = indicator(&ShapeSet::ball(origin, cfg.f_radius), cfg.h)?;
    let mc = McConfig::new(cfg.samples, cfg.seed);

    let out = apply_operator(OperatorKind::TRIANGLE, &[&e, &f], &mc)?;
    let cell = out.grid().cell_volume();
    let mass = McEstimate {
        value: out.values.values.iter().sum::<f64>() * cell,
        stderr: out.stderr.iter().map(|s| (s * cell).powi(2)).sum::<f64>().sqrt(),
        n_samples: cfg.samples as u64,
        seed: cfg.seed,
    };
    let pairing = l1_pairing(&e, &f, &mc)?;
    let combined = mass.stderr.hypot(pairing.stderr);
    let diff = (mass.value - pairing.value).abs();
    let z = if combined > 0.0 { diff / combined } else { 0.0 };
    let agreement_pass = diff <= cfg.sigma * combined;

    let expected = (cfg.f_radius >= cfg.e_radius + 1.0).then(|| e_set.measure());
    let relative_error = expected.map(|m| (pairing.value - m).abs() / m);
    let expected_pass = relative_error.map(|r| r < cfg.max_relative_error);
    let pass = agreement_pass && expected_pass.unwrap_or(true);

    sink.write_csv(
        "l1_identity.csv",
        &["route", "value", "stderr"],
        &[
            vec!["operator_mass".to_string(), num(mass.value), num(mass.stderr)],
            vec!["pairing".to_string(), num(pairing.value), num(pairing.stderr)],
        ],
    )?;
    let report = L1Report {
        operator_mass: mass,
        pairing,
        combined_stderr: combined,
        z,
        agreement_pass,
        expected,
        relative_error,
        expected_pass,
    };
    sink.write_report(pass, &report)?;
    let mut lines = vec![
        format!("||T(1_E, 1_F)||_1 = {:.6} ± {:.2e}", mass.value, mass.stderr),
        format!("<1_E, S^1 1_F>    = {:.6} ± {:.2e}", pairing.value, pairing.stderr),
        format!("difference {:.2} combined standard errors (<= {}) {}", z, cfg.sigma, pass_word(agreement_pass)),
    ];
    if let (Some(m), Some(r), Some(p)) = (expected, relative_error, expected_pass) {
        lines.push(format!("|E| = {m:.6}, relative error {r:.2e} (< {}) {}", cfg.max_relative_error, pass_word(p)));
    }
    lines.push(format!("l1-identity: {}", pass_word(pass)));
    Ok(Verdict { pass, lines })
}
