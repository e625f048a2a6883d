//! Exact membership in the `L^p × L^q → L^1` region of the triangle operator.

use serde::{Deserialize, Serialize};
use simplex_core::inequalities::{t_l1_region_contains, t_l1_region_polygon, ExponentPoint2};
use simplex_core::Q;

use super::Verdict;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Query point `1/p,1/q` as exact rationals; repeatable.
    #[arg(long = "point")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub d: usize,
    pub points: Vec<String>,
    /// Unused by the computation; kept so every run records a seed.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 2,
            points: Vec::new(),
            seed: 0,
        }
    }
}

impl ExperimentConfig for Config {
    fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub point: ExponentPoint2,
    pub inside: bool,
}

fn as_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    if cfg.d < 2 {
        return Err(CliError::config("the region is defined for d >= 2"));
    }
    let queries: Vec<Membership> = cfg
        .points
        .iter()
        .map(|s| {
            let point = ExponentPoint2::parse(s)?;
            Ok(Membership {
                inside: t_l1_region_contains(cfg.d, &point),
                point,
            })
        })
        .collect::<CliResult<_>>()?;
    let polygon = t_l1_region_polygon(cfg.d);
    let poly_rows: Vec<Vec<String>> = polygon
        .iter()
        .map(|p| vec![p.x.to_string(), p.y.to_string(), num(as_f64(&p.x)), num(as_f64(&p.y))])
        .collect();
    sink.write_csv("polygon.csv", &["x", "y", "x_float", "y_float"], &poly_rows)?;
    let rows: Vec<Vec<String>> = queries
        .iter()
        .map(|m| vec![m.point.x.to_string(), m.point.y.to_string(), m.inside.to_string()])
        .collect();
    sink.write_csv("membership.csv", &["x", "y", "inside"], &rows)?;
    sink.write_report(true, &serde_json::json!({ "d": cfg.d, "polygon": polygon, "queries": queries }))?;
    let word = |inside: bool| if inside { "inside" } else { "outside" };
    let lines = match queries.as_slice() {
        [one] => vec![word(one.inside).to_string()],
        many => many
            .iter()
            .map(|m| format!("{},{} {}", m.point.x, m.point.y, word(m.inside)))
            .collect(),
    };
    Ok(Verdict { pass: true, lines })
}
