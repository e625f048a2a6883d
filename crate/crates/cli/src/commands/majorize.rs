//! Pointwise majorization of simplex averages by products of spherical
//! averages: the `C = 1` Cauchy–Schwarz case on random inputs, and the
//! stability of the empirical constant under a larger sampling budget.

use rand::Rng;
use serde::{Deserialize, Serialize};
use simplex_core::exec::Execution;
use simplex_core::geometry::regular_simplex_vertices;
use simplex_core::operators::{majorization_check, McConfig};
use simplex_core::rng::{derive_seed, stream, tag};
use simplex_core::{Grid, GridFunction};

use super::{parse_real, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::inputs::smooth_bumps;
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    /// Dimensions of the Cauchy–Schwarz sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Random input tuples per dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,
    /// Random points per input tuple.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_m: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_samples: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_change: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub dims: Vec<usize>,
    pub inputs: usize,
    pub points: usize,
    pub samples: usize,
    pub h: f64,
    pub sigma: f64,
    pub stability_d: usize,
    pub stability_k: usize,
    pub stability_m: u32,
    pub stability_points: usize,
    /// Base budget; the comparison run uses four times as many.
    pub stability_samples: usize,
    pub stability_h: f64,
    pub max_change: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dims: vec![2, 3],
            inputs: 100,
            points: 100,
            samples: 512,
            h: 0.125,
            sigma: 3.0,
            stability_d: 4,
            stability_k: 2,
            stability_m: 2,
            stability_points: 200,
            stability_samples: 1024,
            stability_h: 0.25,
            max_change: 0.1,
            seed: 1,
        }
    }
}

impl ExperimentConfig for Config {
    fn seed(&self) -> u64 {
        self.seed
    }
}

/// Half width of the input box.
const BOX: f64 = 2.5;
/// Half width of the cube the evaluation points are drawn from.
const POINT_BOX: f64 = 1.5;

#[derive(Debug, Clone, Serialize)]
pub struct CauchySchwarzSummary {
    pub d: usize,
    pub points: usize,
    pub violations: usize,
    pub max_excess_in_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySummary {
    pub d: usize,
    pub k: usize,
    pub m: u32,
    pub samples: [usize; 2],
    pub sup_ratio: [f64; 2],
    pub relative_change: f64,
    pub pass: bool,
}

fn random_points(d: usize, n: usize, seed: u64, salt: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, tag::MAJORIZE, salt);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-POINT_BOX..POINT_BOX)).collect())
        .collect()
}

fn random_inputs(grid: &Grid, k: usize, seed: u64, index: u64) -> Vec<GridFunction> {
    let mut rng = stream(seed, tag::INPUTS, index);
    (0..k).map(|_| smooth_bumps(grid, &mut rng)).collect()
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    let mut rows = Vec::new();
    let mut cs = Vec::new();
    for &d in &cfg.dims {
        if d < 2 {
            return Err(CliError::config("the Cauchy–Schwarz sweep needs d >= 2"));
        }
        let simplex = regular_simplex_vertices(d, 2)?;
        let grid = Grid::new(vec![-BOX; d], vec![BOX; d], cfg.h)?;
        let dseed = derive_seed(cfg.seed, tag::MAJORIZE, d as u64);
        let mut summary = CauchySchwarzSummary {
            d,
            points: 0,
            violations: 0,
            max_excess_in_stderr: f64::NEG_INFINITY,
        };
        for t in 0..cfg.inputs {
            let fs = random_inputs(&grid, 2, dseed, t as u64);
            let refs: Vec<&GridFunction> = fs.iter().collect();
            let xs = random_points(d, cfg.points, dseed, t as u64);
            let mc = McConfig::new(cfg.samples, dseed);
            let samples = Execution::Parallel.map(xs.len(), |i| {
                majorization_check(2, &simplex, &refs, &xs[i], &mc, (t * cfg.points + i) as u64)
            });
            for (i, s) in samples.into_iter().enumerate() {
                let s = s?;
                let excess = s.lhs.value - s.rhs.value;
                let bound = cfg.sigma * s.diff_stderr;
                let violated = excess > bound;
                summary.points += 1;
                summary.violations += violated as usize;
                if s.diff_stderr > 0.0 {
                    summary.max_excess_in_stderr = summary.max_excess_in_stderr.max(excess / s.diff_stderr);
                }
                rows.push(vec![
                    d.to_string(),
                    t.to_string(),
                    i.to_string(),
                    num(s.lhs.value),
                    num(s.rhs.value),
                    num(s.diff_stderr),
                    (!violated).to_string(),
                ]);
            }
        }
        cs.push(summary);
    }
    sink.write_csv(
        "cauchy_schwarz.csv",
        &["d", "input", "point", "lhs", "rhs", "diff_stderr", "pass"],
        &rows,
    )?;

    let stability = stability(cfg, sink)?;
    let cs_pass = cs.iter().all(|s| s.violations == 0);
    let pass = cs_pass && stability.pass;
    sink.write_report(pass, &serde_json::json!({ "cauchy_schwarz": cs, "stability": stability }))?;

    let mut lines: Vec<String> = cs
        .iter()
        .map(|s| format!("Cauchy–Schwarz d={}: {} points, {} violations", s.d, s.points, s.violations))
        .collect();
    lines.push(format!(
        "stability d={} k={} m={}: sup lhs/rhs {:.4} at {} samples, {:.4} at {}; change {:.2}% (< {}%) {}",
        stability.d,
        stability.k,
        stability.m,
        stability.sup_ratio[0],
        stability.samples[0],
        stability.sup_ratio[1],
        stability.samples[1],
        100.0 * stability.relative_change,
        100.0 * cfg.max_change,
        pass_word(stability.pass)
    ));
    lines.push(format!("majorize-check: {}", pass_word(pass)));
    Ok(Verdict { pass, lines })
}

fn stability(cfg: &Config, sink: &Sink) -> CliResult<StabilitySummary> {
    let (d, k, m) = (cfg.stability_d, cfg.stability_k, cfg.stability_m);
    let simplex = regular_simplex_vertices(d, k)?;
    let grid = Grid::new(vec![-BOX; d], vec![BOX; d], cfg.stability_h)?;
    let sseed = derive_seed(cfg.seed, tag::MAJORIZE, 1 << 20);
    let fs = random_inputs(&grid, k, sseed, 0);
    let refs: Vec<&GridFunction> = fs.iter().collect();
    let xs = random_points(d, cfg.stability_points, sseed, 0);
    let budgets = [cfg.stability_samples, 4 * cfg.stability_samples];
    let mut sup = [0.0f64; 2];
    let mut rows = Vec::new();
    for (b, &n) in budgets.iter().enumerate() {
        let mc = McConfig::new(n, sseed);
        let samples = Execution::Parallel.map(xs.len(), |i| majorization_check(m, &simplex, &refs, &xs[i], &mc, i as u64));
        for (i, s) in samples.into_iter().enumerate() {
            let s = s?;
            let ratio = s.ratio();
            if let Some(r) = ratio {
                sup[b] = sup[b].max(r);
            }
            rows.push(vec![
                n.to_string(),
                i.to_string(),
                num(s.lhs.value),
                num(s.rhs.value),
                ratio.map(num).unwrap_or_default(),
            ]);
        }
    }
    sink.write_csv("stability.csv", &["samples", "point", "lhs", "rhs", "ratio"], &rows)?;
    let relative_change = if sup[1] > 0.0 { (sup[1] - sup[0]).abs() / sup[1] } else { f64::INFINITY };
    Ok(StabilitySummary {
        d,
        k,
        m,
        samples: budgets,
        sup_ratio: sup,
        relative_change,
        pass: relative_change < cfg.max_change,
    })
}
