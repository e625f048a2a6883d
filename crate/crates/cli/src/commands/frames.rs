//! Soundness sweep of the independent-frame selection.

use serde::{Deserialize, Serialize};
use simplex_core::exec::Execution;
use simplex_core::geometry::{frame_min_singular_value, regular_simplex_vertices, sample_rotation_in, select_independent_frames};
use simplex_core::rng::{stream, tag};
use simplex_core::Group;

use super::{parse_group, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    /// Dimensions d (with k = d), comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_singular: Option<f64>,
    #[arg(long, value_parser = parse_group)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<Group>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub min_singular: f64,
    pub group: Group,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dims: vec![2, 3],
            trials: 1000,
            min_singular: 1e-6,
            group: Group::Orthogonal,
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
pub struct FrameSummary {
    pub d: usize,
    pub trials: usize,
    pub degenerate: usize,
    pub index_violations: usize,
    pub below_threshold: usize,
    pub smallest_singular_value: f64,
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &d in &cfg.dims {
        if d < 1 {
            return Err(CliError::config("dimensions must be positive"));
        }
        let simplex = regular_simplex_vertices(d, d)?;
        let results = Execution::Parallel.map(cfg.trials, |t| {
            let mut rng = stream(cfg.seed, tag::ROTATION, ((d as u64) << 40) | t as u64);
            let rotations: Vec<_> = (0..d)
                .map(|_| sample_rotation_in(d, cfg.group, &mut rng).expect("d >= 1"))
                .collect();
            match select_independent_frames(&rotations, &simplex) {
                Ok(idx) => {
                    let s = frame_min_singular_value(&rotations, &simplex, &idx);
                    Some((idx, s))
                }
                Err(_) => None,
            }
        });
        let mut summary = FrameSummary {
            d,
            trials: cfg.trials,
            degenerate: 0,
            index_violations: 0,
            below_threshold: 0,
            smallest_singular_value: f64::INFINITY,
        };
        for (t, r) in results.into_iter().enumerate() {
            match r {
                None => {
                    summary.degenerate += 1;
                    rows.push(vec![d.to_string(), t.to_string(), String::new(), String::new(), "degenerate".into()]);
                }
                Some((idx, s)) => {
                    if idx.iter().enumerate().any(|(i, &m)| m < 1 || m > i + 1) {
                        summary.index_violations += 1;
                    }
                    if !(s > cfg.min_singular) {
                        summary.below_threshold += 1;
                    }
                    summary.smallest_singular_value = summary.smallest_singular_value.min(s);
                    let joined = idx.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                    rows.push(vec![d.to_string(), t.to_string(), joined, num(s), "ok".into()]);
                }
            }
        }
        summaries.push(summary);
    }
    let pass = summaries
        .iter()
        .all(|s| s.degenerate == 0 && s.index_violations == 0 && s.below_threshold == 0);
    sink.write_csv("frames.csv", &["d", "trial", "indices", "min_singular_value", "status"], &rows)?;
    sink.write_report(pass, &summaries)?;
    let mut lines: Vec<String> = summaries
        .iter()
        .map(|s| {
            format!(
                "d=k={}: {} tuples, {} degenerate, {} index violations, smallest singular value {:.3e}",
                s.d, s.trials, s.degenerate, s.index_violations, s.smallest_singular_value
            )
        })
        .collect();
    lines.push(format!("frames-check: {}", pass_word(pass)));
    Ok(Verdict { pass, lines })
}
