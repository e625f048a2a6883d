//! Restricted strong-type ratio sweeps over a set family. The family is
//! evaluated once and every requested exponent tuple is judged on it.

use serde::{Deserialize, Serialize};
use simplex_core::exponents::ExponentTuple;
use simplex_core::inequalities::{t_l1_region_contains, Expectation, ExponentPoint2, FamilyKind, Harness, SetFamily, VerificationReport};
use simplex_core::operators::{McConfig, OperatorKind};

use super::{parse_real, pass_word, Verdict};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Sink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExpectMode {
    /// Unbounded for triangle-operator `L^1` targets outside the region,
    /// bounded otherwise.
    #[default]
    Auto,
    Bounded,
    Unbounded,
}

#[derive(Debug, Default, clap::Args, Serialize)]
pub struct Args {
    /// S1, T, S<k> or B.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// `p_1,…,p_k,r` as exact rationals (`inf` allowed); repeatable.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<String>>,
    /// twin-balls, annuli, slabs, knapp-caps or mixed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Rotations per output point.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<ExpectMode>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_cap: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_slope: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub op: String,
    pub d: usize,
    pub exponents: Vec<String>,
    pub family: String,
    pub members: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub h: f64,
    pub samples: usize,
    pub expect: ExpectMode,
    pub slope_tol: f64,
    pub ratio_cap: f64,
    pub max_slope: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            op: "T".into(),
            d: 2,
            exponents: vec!["2,2,2".into()],
            family: "mixed".into(),
            members: 30,
            delta_min: 0.02,
            delta_max: 1.0,
            h: 1.0 / 64.0,
            samples: 4096,
            expect: ExpectMode::Auto,
            slope_tol: 0.15,
            ratio_cap: 1e3,
            max_slope: -0.8,
            seed: 1,
        }
    }
}

impl ExperimentConfig for Config {
    fn seed(&self) -> u64 {
        self.seed
    }
}

fn expectation_for(cfg: &Config, op: OperatorKind, e: &ExponentTuple) -> Expectation {
    let bounded = Expectation::Bounded {
        slope_tol: cfg.slope_tol,
        ratio_cap: cfg.ratio_cap,
    };
    let unbounded = Expectation::Unbounded { max_slope: cfg.max_slope };
    match cfg.expect {
        ExpectMode::Bounded => bounded,
        ExpectMode::Unbounded => unbounded,
        ExpectMode::Auto => {
            let l1_target = !e.r.is_infinite() && e.r.reciprocal() == simplex_core::exponents::q(1, 1);
            if op == OperatorKind::TRIANGLE && l1_target {
                let pt = ExponentPoint2::new(e.p[0].reciprocal(), e.p[1].reciprocal());
                match pt {
                    Ok(pt) if !t_l1_region_contains(cfg.d, &pt) => unbounded,
                    _ => bounded,
                }
            } else {
                bounded
            }
        }
    }
}

/// File-name-safe label such as `2_2_2` or `3over2_3over2_3over4`.
fn label(e: &str) -> String {
    e.chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .replace(',', "_")
        .replace('/', "over")
}

/// Gnuplot script drawing every ratio file on log-log axes.
fn plot_script(files: &[(String, String)]) -> String {
    let curves: Vec<String> = files
        .iter()
        .map(|(name, title)| format!("'{name}' using 1:2:3 with yerrorlines title '{title}'"))
        .collect();
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 'delta'\nset ylabel 'ratio'\nplot {}\n",
        curves.join(", \\\n     ")
    )
}

pub fn run(cfg: &Config, sink: &Sink) -> CliResult<Verdict> {
    let op: OperatorKind = cfg.op.parse()?;
    let kind: FamilyKind = cfg.family.parse()?;
    if cfg.exponents.is_empty() {
        return Err(CliError::config("at least one exponent tuple is required"));
    }
    let tuples: Vec<ExponentTuple> = cfg
        .exponents
        .iter()
        .map(|s| ExponentTuple::parse_list(s))
        .collect::<Result<_, _>>()?;
    let family = SetFamily::new(kind, cfg.d, op.arity(), cfg.delta_min, cfg.delta_max, cfg.members)?;
    let harness = Harness::new(op, cfg.h, McConfig::new(cfg.samples, cfg.seed));
    let evals = harness.evaluate_family(&family)?;

    let mut reports: Vec<VerificationReport> = Vec::new();
    let mut files = Vec::new();
    let mut lines = Vec::new();
    for (text, e) in cfg.exponents.iter().zip(&tuples) {
        let expectation = expectation_for(cfg, op, e);
        let report = harness.report(e, &family, &evals, expectation)?;
        let rows: Vec<Vec<String>> = report
            .ratios
            .iter()
            .map(|p| vec![num(p.delta), num(p.ratio), num(p.stderr)])
            .collect();
        let name = if tuples.len() == 1 {
            "ratios.csv".to_string()
        } else {
            format!("ratios_{}.csv", label(text))
        };
        sink.write_csv(&name, &["delta", "ratio", "stderr"], &rows)?;
        files.push((name, e.to_string()));
        let target = match expectation {
            Expectation::Bounded { slope_tol, .. } => format!("|slope| <= {slope_tol}"),
            Expectation::Unbounded { max_slope } => format!("slope <= {max_slope}"),
        };
        lines.push(format!(
            "{op} {e} on {} ({} members): slope {:.3} ± {:.3}, max ratio {:.4}; expect {target} {}",
            family.kind,
            family.members,
            report.slope.slope,
            report.slope.slope_half_width,
            report.max_ratio,
            pass_word(report.pass)
        ));
        reports.push(report);
    }
    let pass = reports.iter().all(|r| r.pass);
    sink.write_text("plot.gp", &plot_script(&files))?;
    sink.write_report(pass, &reports)?;
    lines.push(format!("verify-ratios: {}", pass_word(pass)));
    Ok(Verdict { pass, lines })
}
