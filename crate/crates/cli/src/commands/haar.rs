//! Moment tests for Haar rotations and uniform sphere points.

use serde::{Deserialize, Serialize};
use simplex_core::exec::Execution;
use simplex_core::geometry::{sample_rotation_in, sample_sphere_point};
use simplex_core::rng::{stream, tag};
use simplex_core::stats::Moments;
use simplex_core::Group;

use super::{parse_group, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    /// Dimensions to test, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// orthogonal (O(d)) or special (SO(d)).
    #[arg(long, value_parser = parse_group)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<Group>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Allowed deviation in standard errors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub dims: Vec<usize>,
    pub group: Group,
    pub samples: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dims: vec![2, 3, 4],
            group: Group::Orthogonal,
            samples: 100_000,
            sigma: 3.0,
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
pub struct MomentTest {
    pub d: usize,
    pub object: &'static str,
    pub statistic: &'static str,
    pub expected: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

fn judge(d: usize, object: &'static str, statistic: &'static str, expected: f64, m: &Moments, sigma: f64) -> MomentTest {
    let (estimate, stderr) = (m.mean(), m.stderr());
    let dev = (estimate - expected).abs();
    let (z, pass) = if stderr > 0.0 {
        (dev / stderr, dev <= sigma * stderr)
    } else {
        (0.0, dev < 1e-12)
    };
    MomentTest {
        d,
        object,
        statistic,
        expected,
        estimate,
        stderr,
        z,
        pass,
    }
}

fn accumulate(rows: Vec<Vec<f64>>, width: usize) -> Vec<Moments> {
    let mut acc = vec![Moments::new(); width];
    for row in rows {
        acc.iter_mut().zip(row).for_each(|(m, v)| m.push(v));
    }
    acc
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    if cfg.samples < 2 {
        return Err(CliError::config("need at least 2 samples"));
    }
    let mut tests = Vec::new();
    for &d in &cfg.dims {
        if d < 2 {
            return Err(CliError::config(format!("moment tests need d >= 2, got {d}")));
        }
        let group = cfg.group;
        let rows = Execution::Parallel.map(cfg.samples, |i| {
            let mut rng = stream(cfg.seed, tag::ROTATION, ((d as u64) << 40) | i as u64);
            let r = sample_rotation_in(d, group, &mut rng).expect("d >= 1");
            let m = r.matrix();
            let tr = m.trace();
            let a = m[(0, 0)];
            vec![tr, tr * tr, a, a * a, a.powi(4), if r.determinant() < 0.0 { 1.0 } else { 0.0 }]
        });
        let acc = accumulate(rows, 6);
        let df = d as f64;
        let fourth = 3.0 / (df * (df + 2.0));
        let trace_sq = if group == Group::Special && d == 2 { 2.0 } else { 1.0 };
        let reflect = if group == Group::Special { 0.0 } else { 0.5 };
        let s = cfg.sigma;
        tests.push(judge(d, "rotation", "E[tr R]", 0.0, &acc[0], s));
        tests.push(judge(d, "rotation", "E[(tr R)^2]", trace_sq, &acc[1], s));
        tests.push(judge(d, "rotation", "E[R11]", 0.0, &acc[2], s));
        tests.push(judge(d, "rotation", "E[R11^2]", 1.0 / df, &acc[3], s));
        tests.push(judge(d, "rotation", "E[R11^4]", fourth, &acc[4], s));
        tests.push(judge(d, "rotation", "P[det R < 0]", reflect, &acc[5], s));

        let rows = Execution::Parallel.map(cfg.samples, |i| {
            let mut rng = stream(cfg.seed, tag::SPHERE, ((d as u64) << 40) | i as u64);
            let p = sample_sphere_point(d, &mut rng).expect("d >= 1");
            let x = p.coords[0];
            vec![x, x * x, x.powi(4)]
        });
        let acc = accumulate(rows, 3);
        tests.push(judge(d, "sphere", "E[x1]", 0.0, &acc[0], s));
        tests.push(judge(d, "sphere", "E[x1^2]", 1.0 / df, &acc[1], s));
        tests.push(judge(d, "sphere", "E[x1^4]", fourth, &acc[2], s));
    }
    let pass = tests.iter().all(|t| t.pass);
    let rows: Vec<Vec<String>> = tests
        .iter()
        .map(|t| {
            vec![
                t.d.to_string(),
                t.object.to_string(),
                t.statistic.to_string(),
                num(t.expected),
                num(t.estimate),
                num(t.stderr),
                num(t.z),
                t.pass.to_string(),
            ]
        })
        .collect();
    sink.write_csv(
        "moments.csv",
        &["d", "object", "statistic", "expected", "estimate", "stderr", "z", "pass"],
        &rows,
    )?;
    sink.write_report(pass, &tests)?;
    let mut lines: Vec<String> = tests
        .iter()
        .map(|t| {
            format!(
                "d={} {:<8} {:<14} expected {:.6} got {:.6} (z = {:.2}) {}",
                t.d,
                t.object,
                t.statistic,
                t.expected,
                t.estimate,
                t.z,
                pass_word(t.pass)
            )
        })
        .collect();
    lines.push(format!("haar-test: {}", pass_word(pass)));
    Ok(Verdict { pass, lines })
}
