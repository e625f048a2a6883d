use std::io::Write;

use serde::{Deserialize, Serialize};

use super::families::{FamilyKind, SetFamily};
use crate::error::{Error, Result};
use crate::exponents::{Exponent, ExponentTuple};
use crate::gridfn::{rasterize, GridFunction};
use crate::operators::{apply_operator, McConfig, McEstimate, OperatorKind, OperatorOutput};
use crate::rng::{derive_seed, tag};
use crate::shape::ShapeSet;
use crate::stats::{fit_line_grouped, LineFit};

/// Largest admissible ratio of standard error to ratio.
pub const MAX_RELATIVE_STDERR: f64 = 0.2;

/// Indicator of `shape` on the smallest lattice-aligned box containing it.
pub fn indicator(shape: &ShapeSet, h: f64) -> Result<GridFunction> {
    let b = shape
        .bounds()
        .ok_or_else(|| Error::UndefinedRatio("set is empty".into()))?;
    let lower: Vec<f64> = b.lo.iter().map(|v| (v - 1e-9).floor()).collect();
    let upper: Vec<f64> = b
        .hi
        .iter()
        .zip(&lower)
        .map(|(v, lo)| (v + 1e-9).ceil().max(lo + 1.0))
        .collect();
    rasterize(shape, lower, upper, h)
}

/// `‖output‖_{L^r}` with its delta-method standard error. For `r = ∞` this
/// is the largest grid value and the standard error at that point.
pub fn output_norm(output: &OperatorOutput, r: &Exponent) -> (f64, f64) {
    let values = &output.values.values;
    if r.is_infinite() {
        let (i, v) = values
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        return (v, output.stderr.get(i).copied().unwrap_or(0.0));
    }
    let r = r.to_f64();
    let cell = output.values.grid.cell_volume();
    let s: f64 = values.iter().filter(|v| **v > 0.0).map(|v| v.powf(r)).sum();
    let norm = (s * cell).powf(r.recip());
    if norm <= 0.0 {
        return (norm, 0.0);
    }
    let lead = norm.powf(1.0 - r) * cell;
    let var: f64 = values
        .iter()
        .zip(&output.stderr)
        .filter(|(v, _)| **v > 0.0)
        .map(|(v, se)| (lead * v.powf(r - 1.0) * se).powi(2))
        .sum();
    (norm, var.sqrt())
}

/// `‖F‖_{L^r} / Π |E_i|^{1/p_i}` with a delta-method standard error from the
/// per-point Monte Carlo errors and the measure errors.
pub fn ratio_from_output(output: &OperatorOutput, measures: &[(f64, f64)], e: &ExponentTuple) -> Result<McEstimate> {
    if measures.len() != e.arity() {
        return Err(Error::arg("one measure per input exponent is required"));
    }
    let mut denom = 1.0;
    let mut rel_var = 0.0;
    for ((m, err), p) in measures.iter().zip(&e.p) {
        if *m <= 0.0 {
            return Err(Error::UndefinedRatio("a set has zero measure".into()));
        }
        let inv = p.reciprocal_f64();
        denom *= m.powf(inv);
        rel_var += (inv * err / m).powi(2);
    }
    let (norm, norm_err) = output_norm(output, &e.r);
    let ratio = norm / denom;
    let stderr = if ratio > 0.0 {
        ratio * ((norm_err / norm).powi(2) + rel_var).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        value: ratio,
        stderr,
        n_samples: output.n_samples as u64,
        seed: output.seed,
    })
}

/// The operator evaluated on one family member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEvaluation {
    pub index: usize,
    pub kind: FamilyKind,
    pub delta: f64,
    pub seed: u64,
    /// `(|E_i|, error)`; the error is zero for closed-form measures.
    pub measures: Vec<(f64, f64)>,
    pub output: OperatorOutput,
}

/// What a family is expected to show.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Expectation {
    /// Uniformly bounded: flat log-log slope and a capped maximum.
    Bounded { slope_tol: f64, ratio_cap: f64 },
    /// Unbounded as `δ → 0`: the slope must fall at or below `max_slope`.
    Unbounded { max_slope: f64 },
}

impl Default for Expectation {
    fn default() -> Self {
        Expectation::Bounded {
            slope_tol: 0.15,
            ratio_cap: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub index: usize,
    pub kind: FamilyKind,
    pub delta: f64,
    pub ratio: f64,
    pub stderr: f64,
}

/// Outcome of a family sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub operator: String,
    pub exponents: ExponentTuple,
    pub family: SetFamily,
    pub h: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub ratios: Vec<RatioPoint>,
    pub max_ratio: f64,
    /// Least-squares slope of `log ratio` against `log δ`, with one
    /// intercept per set kind.
    pub slope: LineFit,
    pub expectation: Expectation,
    pub pass: bool,
}

impl VerificationReport {
    /// `delta,ratio,stderr` rows in family order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "delta,ratio,stderr")?;
        for p in &self.ratios {
            writeln!(w, "{},{},{}", p.delta, p.ratio, p.stderr)?;
        }
        Ok(())
    }
}

/// Operator, grid spacing and sampling shared by a set of ratio runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harness {
    pub op: OperatorKind,
    pub h: f64,
    pub mc: McConfig,
}

impl Harness {
    pub fn new(op: OperatorKind, h: f64, mc: McConfig) -> Self {
        Self { op, h, mc }
    }

    fn evaluate_sets(&self, sets: &[ShapeSet], seed: u64) -> Result<(Vec<(f64, f64)>, OperatorOutput)> {
        if sets.len() != self.op.arity() {
            return Err(Error::arg(format!("{} takes {} sets, got {}", self.op, self.op.arity(), sets.len())));
        }
        let measures: Vec<(f64, f64)> = sets.iter().map(ShapeSet::measure_with_error).collect();
        if measures.iter().any(|(m, _)| *m <= 0.0) {
            return Err(Error::UndefinedRatio("a set has zero measure".into()));
        }
        let inputs: Vec<GridFunction> = sets.iter().map(|s| indicator(s, self.h)).collect::<Result<_>>()?;
        let refs: Vec<&GridFunction> = inputs.iter().collect();
        let cfg = McConfig { seed, ..self.mc };
        Ok((measures, apply_operator(self.op, &refs, &cfg)?))
    }

    /// `‖op(1_{E_1}, …, 1_{E_k})‖_{L^r} / Π |E_i|^{1/p_i}`.
    pub fn restricted_ratio(&self, e: &ExponentTuple, sets: &[ShapeSet]) -> Result<McEstimate> {
        if e.arity() != self.op.arity() {
            return Err(Error::Exponent(format!("{} takes {} exponents, got {e}", self.op, self.op.arity())));
        }
        let (measures, output) = self.evaluate_sets(sets, self.mc.seed)?;
        ratio_from_output(&output, &measures, e)
    }

    /// Evaluates the operator on every member, member `j` with seed
    /// `derive_seed(seed, FAMILY, j)`.
    pub fn evaluate_family(&self, family: &SetFamily) -> Result<Vec<FamilyEvaluation>> {
        if family.k != self.op.arity() {
            return Err(Error::arg(format!("family has {} sets per member, {} needs {}", family.k, self.op, self.op.arity())));
        }
        family
            .all_members()?
            .into_iter()
            .map(|m| {
                let seed = derive_seed(self.mc.seed, tag::FAMILY, m.index as u64);
                let (measures, output) = self.evaluate_sets(&m.sets, seed)?;
                Ok(FamilyEvaluation {
                    index: m.index,
                    kind: m.kind,
                    delta: m.delta,
                    seed,
                    measures,
                    output,
                })
            })
            .collect()
    }

    /// Ratios, slope and verdict for one exponent tuple over evaluated
    /// members.
    pub fn report(
        &self,
        e: &ExponentTuple,
        family: &SetFamily,
        evals: &[FamilyEvaluation],
        expectation: Expectation,
    ) -> Result<VerificationReport> {
        if evals.len() < 5 {
            return Err(Error::arg(format!("need at least 5 scales, got {}", evals.len())));
        }
        let mut ratios = Vec::with_capacity(evals.len());
        for ev in evals {
            let est = ratio_from_output(&ev.output, &ev.measures, e)?;
            if est.value <= 0.0 {
                return Err(Error::UndefinedRatio(format!(
                    "member {} ({} at δ = {}) has ratio 0",
                    ev.index, ev.kind, ev.delta
                )));
            }
            if est.stderr > MAX_RELATIVE_STDERR * est.value {
                return Err(Error::InsufficientBudget(format!(
                    "member {} ({} at δ = {}): stderr {:.3e} exceeds {}% of ratio {:.3e}",
                    ev.index,
                    ev.kind,
                    ev.delta,
                    est.stderr,
                    MAX_RELATIVE_STDERR * 100.0,
                    est.value
                )));
            }
            ratios.push(RatioPoint {
                index: ev.index,
                kind: ev.kind,
                delta: ev.delta,
                ratio: est.value,
                stderr: est.stderr,
            });
        }
        let groups: Vec<usize> = ratios
            .iter()
            .map(|p| FamilyKind::PURE.iter().position(|k| *k == p.kind).unwrap_or(0))
            .collect();
        let x: Vec<f64> = ratios.iter().map(|p| p.delta.ln()).collect();
        let y: Vec<f64> = ratios.iter().map(|p| p.ratio.ln()).collect();
        let slope = fit_line_grouped(&groups, &x, &y)
            .ok_or_else(|| Error::arg("scales do not vary within every set kind"))?;
        let max_ratio = ratios.iter().map(|p| p.ratio).fold(0.0, f64::max);
        let pass = match expectation {
            Expectation::Bounded { slope_tol, ratio_cap } => {
                slope.slope.abs() <= slope_tol && max_ratio.is_finite() && max_ratio <= ratio_cap
            }
            Expectation::Unbounded { max_slope } => slope.slope <= max_slope,
        };
        Ok(VerificationReport {
            operator: self.op.to_string(),
            exponents: e.clone(),
            family: family.clone(),
            h: self.h,
            n_samples: self.mc.n_samples,
            seed: self.mc.seed,
            ratios,
            max_ratio,
            slope,
            expectation,
            pass,
        })
    }

    pub fn verify(&self, e: &ExponentTuple, family: &SetFamily, expectation: Expectation) -> Result<VerificationReport> {
        let evals = self.evaluate_family(family)?;
        self.report(e, family, &evals, expectation)
    }
}

/// Restricted strong-type ratio for one tuple of sets.
pub fn restricted_ratio(
    op: OperatorKind,
    e: &ExponentTuple,
    sets: &[ShapeSet],
    h: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Harness::new(op, h, *cfg).restricted_ratio(e, sets)
}

/// Sweeps `family` and checks the ratios against `expectation`.
pub fn verify_uniform_boundedness(
    op: OperatorKind,
    e: &ExponentTuple,
    family: &SetFamily,
    h: f64,
    cfg: &McConfig,
    expectation: Expectation,
) -> Result<VerificationReport> {
    Harness::new(op, h, *cfg).verify(e, family, expectation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Exponent;

    fn tuple(p: &[i64], r: i64) -> ExponentTuple {
        ExponentTuple::new(p.iter().map(|v| Exponent::int(*v)).collect(), Exponent::int(r))
    }

    #[test]
    fn saturated_spherical_ratio() {
        // S^1 of a large disk is 1 on |x| <= 9
        let e = ExponentTuple::new(vec![Exponent::int(3)], Exponent::int(3));
        let r = restricted_ratio(
            OperatorKind::Spherical,
            &e,
            &[ShapeSet::ball(vec![0.0, 0.0], 10.0)],
            0.25,
            &McConfig::new(64, 1),
        )
        .unwrap();
        assert!(r.value > 0.5 && r.value < 10.0, "{r:?}");
    }

    #[test]
    fn triangle_ratio_on_unit_disks_is_moderate() {
        let disk = ShapeSet::ball(vec![0.0, 0.0], 1.0);
        let r = restricted_ratio(
            OperatorKind::TRIANGLE,
            &tuple(&[2, 2], 2),
            &[disk.clone(), disk],
            1.0 / 16.0,
            &McConfig::new(256, 2),
        )
        .unwrap();
        assert!(r.value > 0.0 && r.value < 10.0, "{r:?}");
    }

    #[test]
    fn far_apart_sets_give_zero() {
        let a = ShapeSet::ball(vec![-2.0, 0.0], 0.3);
        let b = ShapeSet::ball(vec![2.0, 0.0], 0.3);
        let r = restricted_ratio(OperatorKind::TRIANGLE, &tuple(&[2, 2], 2), &[a, b], 0.125, &McConfig::new(64, 3))
            .unwrap();
        assert_eq!(r.value, 0.0);
        let empty = ShapeSet::empty();
        assert!(matches!(
            restricted_ratio(
                OperatorKind::TRIANGLE,
                &tuple(&[2, 2], 2),
                &[empty.clone(), empty],
                0.125,
                &McConfig::new(8, 3)
            ),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn ratio_is_translation_invariant() {
        let e = tuple(&[2, 2], 2);
        let a = ShapeSet::ball(vec![0.25, 0.25], 0.4);
        let b = ShapeSet::ball(vec![1.1, 0.6], 0.3);
        let v = [3.0, -2.0];
        let cfg = McConfig::new(256, 5);
        let r0 = restricted_ratio(OperatorKind::TRIANGLE, &e, &[a.clone(), b.clone()], 0.125, &cfg).unwrap();
        let r1 = restricted_ratio(OperatorKind::TRIANGLE, &e, &[a.translated(&v), b.translated(&v)], 0.125, &cfg)
            .unwrap();
        assert!((r0.value - r1.value).abs() <= 1e-9 * r0.value + 1e-3 * r0.stderr, "{r0:?} {r1:?}");
    }

    #[test]
    fn repeated_member_has_zero_slope() {
        let fam = SetFamily::new(FamilyKind::TwinBalls, 2, 2, 0.1, 0.5, 5).unwrap();
        let h = Harness::new(OperatorKind::TRIANGLE, 1.0 / 16.0, McConfig::new(512, 8));
        let base = h.evaluate_family(&SetFamily { members: 1, ..fam.clone() }).unwrap().remove(0);
        let evals: Vec<FamilyEvaluation> = fam
            .deltas()
            .into_iter()
            .enumerate()
            .map(|(i, delta)| FamilyEvaluation { index: i, delta, ..base.clone() })
            .collect();
        let rep = h.report(&tuple(&[2, 2], 2), &fam, &evals, Expectation::default()).unwrap();
        assert_eq!(rep.slope.slope, 0.0);
        assert!(rep.pass);
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("delta,ratio,stderr\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn small_budget_is_rejected() {
        let fam = SetFamily::new(FamilyKind::TwinBalls, 2, 2, 0.05, 0.2, 5).unwrap();
        let h = Harness::new(OperatorKind::TRIANGLE, 1.0 / 16.0, McConfig::new(2, 8));
        let err = h.verify(&tuple(&[2, 2], 2), &fam, Expectation::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientBudget(_) | Error::UndefinedRatio(_)), "{err:?}");
    }
}
