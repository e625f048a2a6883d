use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{McConfig, McEstimate, OperatorKind};
use crate::error::{Error, Result};
use crate::geometry::{fill_haar_frame, fill_sphere_point, regular_simplex_vertices, Group, SimplexConfig};
use crate::gridfn::{Grid, GridFunction};
use crate::rng::{stream, tag};
use crate::shape::Bounds;
use crate::stats::Moments;

/// Random configuration generator for one operator in `R^d`.
#[derive(Debug, Clone)]
pub(crate) enum Placement {
    Sphere { d: usize },
    Simplex { simplex: SimplexConfig, group: Group },
    Bilinear { d: usize },
}

impl Placement {
    pub(crate) fn new(op: OperatorKind, d: usize, group: Group) -> Result<Self> {
        match op {
            OperatorKind::Spherical => {
                if d < 1 {
                    return Err(Error::dim("spherical average needs d >= 1"));
                }
                Ok(Placement::Sphere { d })
            }
            OperatorKind::Simplex { k } => {
                if k > d {
                    return Err(Error::dim(format!("simplex order k={k} exceeds dimension d={d}")));
                }
                Ok(Placement::Simplex {
                    simplex: regular_simplex_vertices(d, k)?,
                    group,
                })
            }
            OperatorKind::Bilinear => {
                if d < 2 {
                    return Err(Error::dim("bilinear spherical average is only supported for d >= 2"));
                }
                Ok(Placement::Bilinear { d })
            }
        }
    }

    pub(crate) fn from_simplex(simplex: &SimplexConfig, group: Group) -> Self {
        if simplex.k == 1 {
            Placement::Sphere { d: simplex.d }
        } else {
            Placement::Simplex {
                simplex: simplex.clone(),
                group,
            }
        }
    }

    pub(crate) fn arity(&self) -> usize {
        match self {
            Placement::Sphere { .. } => 1,
            Placement::Simplex { simplex, .. } => simplex.k,
            Placement::Bilinear { .. } => 2,
        }
    }

    /// Range of `|w_i|`.
    fn reach(&self) -> (f64, f64) {
        match self {
            Placement::Bilinear { .. } => (0.0, 1.0),
            _ => (1.0, 1.0),
        }
    }

    pub(crate) fn tag(&self) -> u64 {
        match self {
            Placement::Sphere { .. } => tag::SPHERICAL_AVG,
            Placement::Simplex { .. } => tag::SIMPLEX_AVG,
            Placement::Bilinear { .. } => tag::BILINEAR_AVG,
        }
    }

    pub(crate) fn scratch_len(&self) -> usize {
        match self {
            Placement::Simplex { simplex, .. } => simplex.d * simplex.k,
            _ => 0,
        }
    }

    /// Writes `w_1, …, w_k` (each of length `d`) into `out`.
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        match self {
            Placement::Sphere { d } | Placement::Bilinear { d } => {
                debug_assert_eq!(out.len(), d * self.arity());
                fill_sphere_point(rng, out)
            }
            Placement::Simplex { simplex, group } => {
                let (d, k) = (simplex.d, simplex.k);
                fill_haar_frame(d, k, *group, rng, scratch);
                for (i, u) in simplex.vertices.iter().enumerate() {
                    let w = &mut out[i * d..(i + 1) * d];
                    w.fill(0.0);
                    for (j, &uj) in u.iter().enumerate().take(i + 1) {
                        let col = &scratch[j * d..(j + 1) * d];
                        w.iter_mut().zip(col).for_each(|(a, c)| *a += uj * c);
                    }
                }
            }
        }
    }

    /// True when `Π f_i(x − w_i)` vanishes for every configuration because
    /// some input's support box is out of reach of `x`.
    #[inline]
    pub(crate) fn trivially_zero(&self, x: &[f64], supports: &[Option<Bounds>]) -> bool {
        let (lo, hi) = self.reach();
        supports.iter().any(|b| match b {
            None => true,
            Some(b) => b.distance(x) > hi + 1e-12 || b.max_distance(x) < lo - 1e-12,
        })
    }
}

/// Mean and spread of `Π f_i(x − w_i)` over `n` configurations.
#[inline]
pub(crate) fn sample_product<R: Rng + ?Sized>(
    placement: &Placement,
    inputs: &[&GridFunction],
    x: &[f64],
    n: usize,
    rng: &mut R,
    scratch: &mut [f64],
    w: &mut [f64],
    y: &mut [f64],
) -> Moments {
    let d = x.len();
    let mut m = Moments::new();
    for _ in 0..n {
        placement.draw(rng, scratch, w);
        let mut prod = 1.0;
        for (i, f) in inputs.iter().enumerate() {
            let wi = &w[i * d..(i + 1) * d];
            y.iter_mut().zip(x.iter().zip(wi)).for_each(|(o, (a, b))| *o = a - b);
            prod *= f.eval(y);
            if prod == 0.0 {
                break;
            }
        }
        m.push(prod);
    }
    m
}

/// An operator evaluated on an output grid, with the per-point standard
/// error of the Monte Carlo mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorOutput {
    pub values: GridFunction,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl OperatorOutput {
    pub fn grid(&self) -> &Grid {
        &self.values.grid
    }

    /// Point estimate at flat index `i`.
    pub fn estimate(&self, i: usize) -> McEstimate {
        McEstimate {
            value: self.values.values[i],
            stderr: self.stderr[i],
            n_samples: self.n_samples as u64,
            seed: self.seed,
        }
    }
}

fn check_inputs(inputs: &[&GridFunction]) -> Result<usize> {
    let first = inputs.first().ok_or_else(|| Error::arg("operator needs at least one input"))?;
    let d = first.d();
    for f in inputs {
        if f.d() != d {
            return Err(Error::dim("all inputs must share one dimension"));
        }
        if f.grid.h.iter().zip(&first.grid.h).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs()) {
            return Err(Error::arg("all inputs must share one grid spacing"));
        }
    }
    Ok(d)
}

/// Output grid: the union of the input boxes dilated by the operator's
/// reach (1), with the input spacing.
pub(crate) fn output_grid(inputs: &[&GridFunction]) -> Grid {
    let mut g = inputs[0].grid.clone();
    for f in &inputs[1..] {
        g = g.union(&f.grid);
    }
    g.dilated(1.0)
}

pub(crate) fn evaluate_on_grid(
    placement: &Placement,
    inputs: &[&GridFunction],
    grid: Grid,
    cfg: &McConfig,
) -> OperatorOutput {
    let d = grid.d();
    let k = placement.arity();
    let supports: Vec<_> = inputs.iter().map(|f| f.support_bounds()).collect();
    let t = placement.tag();
    let results = cfg.execution.map(grid.len(), |idx| {
        let mut x = vec![0.0; d];
        grid.center_into(idx, &mut x);
        if placement.trivially_zero(&x, &supports) {
            return (0.0, 0.0);
        }
        let mut rng = stream(cfg.seed, t, idx as u64);
        let mut scratch = vec![0.0; placement.scratch_len()];
        let mut w = vec![0.0; k * d];
        let mut y = vec![0.0; d];
        let m = sample_product(placement, inputs, &x, cfg.n_samples, &mut rng, &mut scratch, &mut w, &mut y);
        (m.mean(), m.stderr())
    });
    let (values, stderr): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
    OperatorOutput {
        values: GridFunction {
            grid,
            values,
            shape: None,
        },
        stderr,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
    }
}

/// Applies `op` to `inputs` on the default output grid.
pub fn apply_operator(op: OperatorKind, inputs: &[&GridFunction], cfg: &McConfig) -> Result<OperatorOutput> {
    let d = check_inputs(inputs)?;
    if inputs.len() != op.arity() {
        return Err(Error::arg(format!("{op} takes {} inputs, got {}", op.arity(), inputs.len())));
    }
    let placement = Placement::new(op, d, cfg.group)?;
    Ok(evaluate_on_grid(&placement, inputs, output_grid(inputs), cfg))
}

/// `S^1 f(x)`: the mean of `f(x − ω)` over the unit sphere.
pub fn spherical_average(f: &GridFunction, cfg: &McConfig) -> Result<OperatorOutput> {
    apply_operator(OperatorKind::Spherical, &[f], cfg)
}

/// `S^k(f_1, …, f_k)(x)`: the mean of `Π f_i(x − R u_i)` over Haar `R`.
pub fn simplex_average(simplex: &SimplexConfig, inputs: &[&GridFunction], cfg: &McConfig) -> Result<OperatorOutput> {
    let d = check_inputs(inputs)?;
    if simplex.d != d {
        return Err(Error::dim(format!("simplex lives in R^{} but inputs in R^{d}", simplex.d)));
    }
    if inputs.len() != simplex.k {
        return Err(Error::arg(format!("S^{} takes {} inputs, got {}", simplex.k, simplex.k, inputs.len())));
    }
    let placement = Placement::from_simplex(simplex, cfg.group);
    Ok(evaluate_on_grid(&placement, inputs, output_grid(inputs), cfg))
}

/// `B(f, g)(x)`: the mean of `f(x − u_1) g(x − u_2)` over `(u_1, u_2) ∈ S^{2d-1}`.
pub fn bilinear_spherical_average(f: &GridFunction, g: &GridFunction, cfg: &McConfig) -> Result<OperatorOutput> {
    apply_operator(OperatorKind::Bilinear, &[f, g], cfg)
}

/// Estimate of `op(inputs)(x)` at a single point. `index` selects the
/// random stream, so equal `(seed, index)` pairs reuse configurations.
pub fn evaluate_at(
    op: OperatorKind,
    inputs: &[&GridFunction],
    x: &[f64],
    cfg: &McConfig,
    index: u64,
) -> Result<McEstimate> {
    let d = check_inputs(inputs)?;
    if x.len() != d {
        return Err(Error::dim("evaluation point has the wrong dimension"));
    }
    if inputs.len() != op.arity() {
        return Err(Error::arg(format!("{op} takes {} inputs, got {}", op.arity(), inputs.len())));
    }
    let placement = Placement::new(op, d, cfg.group)?;
    let mut rng = stream(cfg.seed, placement.tag(), index);
    let mut scratch = vec![0.0; placement.scratch_len()];
    let mut w = vec![0.0; placement.arity() * d];
    let mut y = vec![0.0; d];
    let m = sample_product(&placement, inputs, x, cfg.n_samples, &mut rng, &mut scratch, &mut w, &mut y);
    Ok(McEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        n_samples: cfg.n_samples as u64,
        seed: cfg.seed,
    })
}
