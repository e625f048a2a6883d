//! Numerical lower bounds for `‖op‖_{L^{p_1} × … × L^{p_k} → L^r}`.
//!
//! For `r ≥ 1` the inputs are improved one at a time: with the others fixed,
//! the free input is replaced by the duality-map image of the adjoint of the
//! operator applied to the dual element of the current output. For `r < 1`
//! the search runs over the parameters of the indicator set families instead.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{Exponent, ExponentTuple};
use crate::gridfn::{lp_norm, Grid, GridFunction};
use crate::inequalities::{output_norm, FamilyKind, Harness, SetFamily};
use crate::operators::averages::Placement;
use crate::operators::{apply_operator, McConfig, McEstimate, OperatorKind};
use crate::rng::{derive_seed, stream, tag};

/// Input box `[-half_width, half_width]^d` sampled with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputGrid {
    pub d: usize,
    pub half_width: f64,
    pub h: f64,
}

impl InputGrid {
    pub fn new(d: usize, half_width: f64, h: f64) -> Result<Self> {
        let g = InputGrid { d, half_width, h };
        g.grid()?;
        Ok(g)
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.d < 1 {
            return Err(Error::dim("input grid needs d >= 1"));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::arg(format!("half width must be positive, got {}", self.half_width)));
        }
        Grid::new(vec![-self.half_width; self.d], vec![self.half_width; self.d], self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerConfig {
    /// Iteration cap per restart.
    pub iterations: usize,
    pub restarts: usize,
    /// Relative objective change regarded as stalled.
    pub tolerance: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
    /// Sampling for the operator and its adjoint; `mc.seed` is the run seed.
    pub mc: McConfig,
}

impl Default for ExtremizerConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            restarts: 4,
            tolerance: 1e-3,
            patience: 3,
            mc: McConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AscentMethod {
    DualityMap,
    ShapeSearch,
}

/// Objective values of one restart, one entry per completed iteration
/// (the first entry is the initial point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub seed: u64,
    pub history: Vec<f64>,
    pub stderr: Vec<f64>,
    pub converged: bool,
}

impl RestartTrace {
    pub fn final_value(&self) -> f64 {
        self.history.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub operator: OperatorKind,
    pub exponents: ExponentTuple,
    pub method: AscentMethod,
    /// Final objective of the best restart.
    pub lower_bound: f64,
    /// History of the best restart.
    pub iterate_history: Vec<f64>,
    pub best_restart: usize,
    pub restarts: Vec<RestartTrace>,
    pub grid: InputGrid,
    pub seed: u64,
}

impl NormEstimate {
    /// Columns `restart,iteration,objective,stderr`.
    pub fn write_history_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "restart,iteration,objective,stderr")?;
        for t in &self.restarts {
            for (i, (v, se)) in t.history.iter().zip(&t.stderr).enumerate() {
                writeln!(w, "{},{},{:.12e},{:.6e}", t.restart, i, v, se)?;
            }
        }
        Ok(())
    }
}

/// `‖op(f_1, …, f_k)‖_{L^r} / Π ‖f_i‖_{L^{p_i}}` with the standard error of
/// the numerator carried through.
pub fn objective(op: OperatorKind, e: &ExponentTuple, inputs: &[GridFunction], mc: &McConfig) -> Result<McEstimate> {
    if e.arity() != op.arity() || inputs.len() != op.arity() {
        return Err(Error::arg(format!("{op} takes {} inputs and exponents", op.arity())));
    }
    let mut denom = 1.0;
    for (f, p) in inputs.iter().zip(&e.p) {
        denom *= lp_norm(f, p.to_f64())?;
    }
    if !(denom > 0.0) {
        return Err(Error::UndefinedRatio("an input has zero norm".into()));
    }
    let refs: Vec<&GridFunction> = inputs.iter().collect();
    let out = apply_operator(op, &refs, mc)?;
    let (norm, se) = output_norm(&out, &e.r);
    Ok(McEstimate {
        value: norm / denom,
        stderr: se / denom,
        n_samples: mc.n_samples as u64,
        seed: mc.seed,
    })
}

/// Runs `restarts` independent ascents and keeps the best, with the default
/// stopping rule and sampling budget.
pub fn estimate_norm(
    op: OperatorKind,
    e: &ExponentTuple,
    grid: &InputGrid,
    iterations: usize,
    restarts: usize,
    seed: u64,
) -> Result<NormEstimate> {
    let base = ExtremizerConfig::default();
    let cfg = ExtremizerConfig {
        iterations,
        restarts,
        mc: McConfig { seed, ..base.mc },
        ..base
    };
    estimate_norm_with(op, e, grid, &cfg)
}

pub fn estimate_norm_with(
    op: OperatorKind,
    e: &ExponentTuple,
    grid: &InputGrid,
    cfg: &ExtremizerConfig,
) -> Result<NormEstimate> {
    if e.arity() != op.arity() {
        return Err(Error::Exponent(format!("{op} takes {} exponents, got {e}", op.arity())));
    }
    if let Some(p) = e.p.iter().find(|p| !p.is_infinite() && p.to_f64() < 1.0) {
        return Err(Error::Exponent(format!("input exponents must lie in [1, ∞], got {p}")));
    }
    if cfg.restarts < 1 {
        return Err(Error::arg("at least one restart is required"));
    }
    grid.grid()?;
    let banach = e.r.is_infinite() || e.r.to_f64() >= 1.0;
    let seed = cfg.mc.seed;
    let traces = cfg.mc.execution.map(cfg.restarts, |j| {
        let run_seed = derive_seed(seed, tag::EXTREMIZER, j as u64);
        if banach {
            duality_ascent(op, e, grid, cfg, j, run_seed)
        } else {
            shape_search(op, e, grid, cfg, j, run_seed)
        }
    });
    let traces: Vec<RestartTrace> = traces.into_iter().collect::<Result<_>>()?;
    let best = traces
        .iter()
        .enumerate()
        .fold(0, |b, (i, t)| if t.final_value() > traces[b].final_value() { i } else { b });
    Ok(NormEstimate {
        operator: op,
        exponents: e.clone(),
        method: if banach { AscentMethod::DualityMap } else { AscentMethod::ShapeSearch },
        lower_bound: traces[best].final_value(),
        iterate_history: traces[best].history.clone(),
        best_restart: best,
        restarts: traces,
        grid: *grid,
        seed,
    })
}

fn stalled(history: &[f64], tol: f64, patience: usize) -> bool {
    if patience == 0 || history.len() <= patience {
        return false;
    }
    history.windows(2).rev().take(patience).all(|w| {
        let scale = w[0].abs().max(w[1].abs());
        scale == 0.0 || (w[1] - w[0]).abs() <= tol * scale
    })
}

/// Unit ball indicators for the first restart, Gaussian bumps with random
/// centres and widths afterwards.
fn initial_inputs(grid: &Grid, k: usize, restart: usize, seed: u64) -> Vec<GridFunction> {
    let d = grid.d();
    let half = grid.upper()[0];
    let mut rng = stream(seed, tag::INPUTS, restart as u64);
    (0..k)
        .map(|_| {
            if restart == 0 {
                return GridFunction::from_fn(grid.clone(), |x| if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 { 1.0 } else { 0.0 });
            }
            let c: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5) * half).collect();
            let sigma: f64 = rng.random_range(0.25..0.75);
            GridFunction::from_fn(grid.clone(), |x| {
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            })
        })
        .collect()
}

fn normalized(mut f: GridFunction, p: &Exponent) -> Option<GridFunction> {
    let n = lp_norm(&f, p.to_f64()).ok()?;
    if !(n > 0.0 && n.is_finite()) {
        return None;
    }
    f.values.iter_mut().for_each(|v| *v /= n);
    f.shape = None;
    Some(f)
}

/// Dual element of the output for `L^r`: `F^{r−1}`, or the indicator of the
/// largest cell for `r = ∞`.
fn dual_weight(out: &GridFunction, r: &Exponent) -> GridFunction {
    let mut w = GridFunction::zeros(out.grid.clone());
    if r.is_infinite() {
        let (i, v) = out
            .values
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        if v > 0.0 {
            w.values[i] = 1.0;
        }
    } else {
        let r = r.to_f64();
        w.values = out.values.iter().map(|v| v.powf(r - 1.0)).collect();
    }
    w
}

/// Duality map of `g ∈ L^{p'}` into `L^p`, before normalization. `None` when
/// `g` vanishes.
fn duality_map(g: &GridFunction, p: &Exponent) -> Option<GridFunction> {
    let max = g.max_value();
    if !(max > 0.0) {
        return None;
    }
    let mut f = GridFunction::zeros(g.grid.clone());
    if p.is_infinite() {
        // g ≥ 0, so the constant 1 attains ⟨f, g⟩ = ‖g‖_1; unlike the sign of
        // g it does not inherit holes from cells no sample reached
        f.values.fill(1.0);
    } else {
        let p = p.to_f64();
        if p == 1.0 {
            f.values = g.values.iter().map(|v| if *v >= max * (1.0 - 1e-9) { 1.0 } else { 0.0 }).collect();
        } else {
            let e = (p - 1.0).recip();
            f.values = g.values.iter().map(|v| (v / max).powf(e)).collect();
        }
    }
    Some(f)
}

/// Adjoint of the operator in slot `slot` applied to `weight`:
/// `y ↦ E[weight(y + w_slot) Π_{j≠slot} f_j(y + w_slot − w_j)]`.
fn adjoint_in_slot(
    placement: &Placement,
    inputs: &[GridFunction],
    slot: usize,
    weight: &GridFunction,
    grid: &Grid,
    mc: &McConfig,
    seed: u64,
) -> GridFunction {
    let d = grid.d();
    let k = inputs.len();
    let n = mc.n_samples;
    let values = mc.execution.map(grid.len(), |idx| {
        let mut y = vec![0.0; d];
        grid.center_into(idx, &mut y);
        let mut rng = stream(seed, tag::GRADIENT, idx as u64);
        let mut scratch = vec![0.0; placement.scratch_len()];
        let mut w = vec![0.0; k * d];
        let mut z = vec![0.0; d];
        let mut acc = 0.0;
        for _ in 0..n {
            placement.draw(&mut rng, &mut scratch, &mut w);
            let ws = &w[slot * d..(slot + 1) * d];
            z.iter_mut().zip(y.iter().zip(ws)).for_each(|(o, (a, b))| *o = a + b);
            let mut v = weight.eval(&z);
            for (j, f) in inputs.iter().enumerate() {
                if v == 0.0 {
                    break;
                }
                if j == slot {
                    continue;
                }
                let wj = &w[j * d..(j + 1) * d];
                z.iter_mut()
                    .zip(y.iter().zip(ws.iter().zip(wj)))
                    .for_each(|(o, (a, (b, c)))| *o = a + b - c);
                v *= f.eval(&z);
            }
            acc += v;
        }
        acc / n as f64
    });
    GridFunction {
        grid: grid.clone(),
        values,
        shape: None,
    }
}

const MAX_FAILURES: usize = 3;

fn duality_ascent(
    op: OperatorKind,
    e: &ExponentTuple,
    input_grid: &InputGrid,
    cfg: &ExtremizerConfig,
    restart: usize,
    seed: u64,
) -> Result<RestartTrace> {
    let grid = input_grid.grid()?;
    let k = op.arity();
    let placement = Placement::new(op, input_grid.d, cfg.mc.group)?;
    let mc = McConfig { seed, ..cfg.mc };
    let mut fs: Vec<GridFunction> = initial_inputs(&grid, k, restart, cfg.mc.seed)
        .into_iter()
        .zip(&e.p)
        .map(|(f, p)| normalized(f, p).ok_or_else(|| Error::Degenerate("initial input vanishes".into())))
        .collect::<Result<_>>()?;

    let evaluate = |fs: &[GridFunction]| -> Result<(McEstimate, GridFunction)> {
        let refs: Vec<&GridFunction> = fs.iter().collect();
        let out = apply_operator(op, &refs, &mc)?;
        let (norm, se) = output_norm(&out, &e.r);
        let denom: f64 = fs.iter().zip(&e.p).map(|(f, p)| lp_norm(f, p.to_f64())).product::<Result<f64>>()?;
        let est = McEstimate {
            value: norm / denom,
            stderr: se / denom,
            n_samples: mc.n_samples as u64,
            seed,
        };
        Ok((est, out.values))
    };

    let (mut est, mut out) = evaluate(&fs)?;
    let mut history = vec![est.value];
    let mut stderr = vec![est.stderr];
    let mut converged = false;
    for iteration in 0..cfg.iterations {
        for slot in 0..k {
            let weight = dual_weight(&out, &e.r);
            let gseed = derive_seed(seed, tag::GRADIENT, (iteration * k + slot) as u64);
            let g = adjoint_in_slot(&placement, &fs, slot, &weight, &grid, &mc, gseed);
            let Some(target) = duality_map(&g, &e.p[slot]).and_then(|t| normalized(t, &e.p[slot])) else {
                continue;
            };
            let mut step = 1.0;
            let mut failures = 0;
            loop {
                let mut mixed = fs[slot].clone();
                mixed
                    .values
                    .iter_mut()
                    .zip(&target.values)
                    .for_each(|(a, b)| *a = (1.0 - step) * *a + step * b);
                let mut trial = fs.clone();
                let accepted = normalized(mixed, &e.p[slot]).and_then(|f| {
                    trial[slot] = f;
                    evaluate(&trial).ok().filter(|(v, _)| v.value.is_finite())
                });
                match accepted {
                    Some((v, o)) => {
                        fs = trial;
                        est = v;
                        out = o;
                        break;
                    }
                    None => {
                        failures += 1;
                        if failures >= MAX_FAILURES {
                            return Err(Error::Divergence(format!(
                                "objective not finite after {MAX_FAILURES} step halvings (restart {restart}, iteration {iteration})"
                            )));
                        }
                        step /= 2.0;
                    }
                }
            }
        }
        history.push(est.value);
        stderr.push(est.stderr);
        if stalled(&history, cfg.tolerance, cfg.patience) {
            converged = true;
            break;
        }
    }
    Ok(RestartTrace {
        restart,
        seed,
        history,
        stderr,
        converged,
    })
}

/// Smallest and largest scale searched in the quasi-Banach range.
const SHAPE_SCALES: (f64, f64) = (0.02, 1.0);

/// Hill climbing in `log δ` over one pure set family, with the step halved
/// whenever neither neighbour improves. Stops once the step drops below
/// `1/64` or after the iteration cap.
fn shape_search(
    op: OperatorKind,
    e: &ExponentTuple,
    input_grid: &InputGrid,
    cfg: &ExtremizerConfig,
    restart: usize,
    seed: u64,
) -> Result<RestartTrace> {
    let kind = FamilyKind::PURE[restart % FamilyKind::PURE.len()];
    let family = SetFamily::new(kind, input_grid.d, op.arity(), SHAPE_SCALES.0, SHAPE_SCALES.1, 1)?;
    let harness = Harness::new(op, input_grid.h, McConfig { seed, ..cfg.mc });
    let (lo, hi) = (SHAPE_SCALES.0.ln(), SHAPE_SCALES.1.ln());
    let value = |log_delta: f64| -> Result<McEstimate> {
        let sets = family.sets(kind, log_delta.clamp(lo, hi).exp())?;
        match harness.restricted_ratio(e, &sets) {
            Err(Error::UndefinedRatio(_)) => Ok(McEstimate::exact(0.0, seed)),
            r => r,
        }
    };
    let mut rng = stream(cfg.mc.seed, tag::INPUTS, restart as u64);
    let mut at = rng.random_range(lo..=hi);
    let mut best = value(at)?;
    let mut history = vec![best.value];
    let mut stderr = vec![best.stderr];
    let mut step = 1.0;
    let mut converged = false;
    for _ in 0..cfg.iterations {
        let mut moved = false;
        for cand in [at - step, at + step] {
            if cand < lo - 1e-12 || cand > hi + 1e-12 {
                continue;
            }
            let v = value(cand)?;
            if v.value > best.value {
                best = v;
                at = cand;
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
        history.push(best.value);
        stderr.push(best.stderr);
        if step < 1.0 / 64.0 {
            converged = true;
            break;
        }
    }
    Ok(RestartTrace {
        restart,
        seed,
        history,
        stderr,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::q;
    use crate::exec::Execution;

    fn small(samples: usize, seed: u64) -> ExtremizerConfig {
        ExtremizerConfig {
            iterations: 8,
            restarts: 2,
            mc: McConfig::new(samples, seed).with_execution(Execution::Parallel),
            ..ExtremizerConfig::default()
        }
    }

    #[test]
    fn spherical_l1_norm_is_one() {
        let e = ExponentTuple::new(vec![Exponent::int(1)], Exponent::int(1));
        let grid = InputGrid::new(2, 1.5, 1.0 / 8.0).unwrap();
        let est = estimate_norm_with(OperatorKind::Spherical, &e, &grid, &small(256, 1)).unwrap();
        assert!((est.lower_bound - 1.0).abs() < 0.02, "{}", est.lower_bound);
    }

    #[test]
    fn bounded_inputs_give_one() {
        let e = ExponentTuple::new(vec![Exponent::Infinite; 2], Exponent::Infinite);
        let grid = InputGrid::new(2, 2.0, 1.0 / 8.0).unwrap();
        let est = estimate_norm_with(OperatorKind::TRIANGLE, &e, &grid, &small(128, 2)).unwrap();
        assert!((est.lower_bound - 1.0).abs() < 0.01, "{}", est.lower_bound);
    }

    #[test]
    fn lower_bound_is_best_restart_and_history_ascends() {
        let e = ExponentTuple::new(vec![Exponent::Finite(q(3, 2)); 2], Exponent::int(1));
        let grid = InputGrid::new(2, 1.5, 1.0 / 8.0).unwrap();
        let est = estimate_norm_with(OperatorKind::TRIANGLE, &e, &grid, &small(256, 3)).unwrap();
        let best = est.restarts.iter().map(RestartTrace::final_value).fold(0.0, f64::max);
        assert_eq!(est.lower_bound, best);
        assert_eq!(est.lower_bound, *est.iterate_history.last().unwrap());
        for t in &est.restarts {
            for i in 1..t.history.len() {
                let tol = 3.0 * (t.stderr[i].powi(2) + t.stderr[i - 1].powi(2)).sqrt();
                assert!(t.history[i] >= t.history[i - 1] - tol, "{:?}", t.history);
            }
        }
    }

    #[test]
    fn hull_vertex_estimate_is_stable_under_refinement() {
        let e = ExponentTuple::new(vec![Exponent::Finite(q(3, 2)); 2], Exponent::int(1));
        let cfg = ExtremizerConfig {
            iterations: 6,
            ..small(256, 11)
        };
        let coarse = InputGrid::new(2, 1.5, 1.0 / 8.0).unwrap();
        let fine = InputGrid::new(2, 1.5, 1.0 / 16.0).unwrap();
        let a = estimate_norm_with(OperatorKind::TRIANGLE, &e, &coarse, &cfg).unwrap();
        let b = estimate_norm_with(OperatorKind::TRIANGLE, &e, &fine, &cfg).unwrap();
        assert!((a.lower_bound - b.lower_bound).abs() < 0.05 * b.lower_bound, "{} {}", a.lower_bound, b.lower_bound);
    }

    #[test]
    fn objective_is_homogeneous() {
        let grid = InputGrid::new(2, 1.5, 1.0 / 8.0).unwrap().grid().unwrap();
        let fs = initial_inputs(&grid, 2, 1, 7);
        let e = ExponentTuple::new(vec![Exponent::int(2); 2], Exponent::int(2));
        let mc = McConfig::new(64, 5);
        let a = objective(OperatorKind::TRIANGLE, &e, &fs, &mc).unwrap();
        let scaled = vec![fs[0].scaled(3.5), fs[1].scaled(0.25)];
        let b = objective(OperatorKind::TRIANGLE, &e, &scaled, &mc).unwrap();
        assert!((a.value - b.value).abs() <= 1e-12 * a.value, "{} {}", a.value, b.value);
    }

    #[test]
    fn quasi_banach_targets_use_shape_search() {
        let e = ExponentTuple::new(vec![Exponent::Finite(q(3, 2)); 2], Exponent::Finite(q(3, 4)));
        let grid = InputGrid::new(2, 2.0, 1.0 / 16.0).unwrap();
        let cfg = ExtremizerConfig {
            iterations: 2,
            ..small(64, 4)
        };
        let est = estimate_norm_with(OperatorKind::TRIANGLE, &e, &grid, &cfg).unwrap();
        assert_eq!(est.method, AscentMethod::ShapeSearch);
        assert!(est.lower_bound > 0.0);
        for t in &est.restarts {
            assert!(t.history.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn rejects_exponents_below_one() {
        let e = ExponentTuple::new(vec![Exponent::Finite(q(1, 2))], Exponent::int(1));
        let grid = InputGrid::new(2, 1.5, 0.125).unwrap();
        assert!(matches!(
            estimate_norm(OperatorKind::Spherical, &e, &grid, 2, 1, 0),
            Err(Error::Exponent(_))
        ));
    }

    #[test]
    fn history_csv_has_one_row_per_iterate() {
        let e = ExponentTuple::new(vec![Exponent::int(1)], Exponent::int(1));
        let grid = InputGrid::new(2, 1.5, 0.25).unwrap();
        let est = estimate_norm_with(OperatorKind::Spherical, &e, &grid, &small(32, 9)).unwrap();
        let mut buf = Vec::new();
        est.write_history_csv(&mut buf).unwrap();
        let rows = String::from_utf8(buf).unwrap().lines().count() - 1;
        assert_eq!(rows, est.restarts.iter().map(|t| t.history.len()).sum::<usize>());
    }
}
