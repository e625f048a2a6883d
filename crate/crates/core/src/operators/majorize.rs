use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::averages::Placement;
use super::{McConfig, McEstimate};
use crate::error::{Error, Result};
use crate::exponents::{q as ratio, Q};
use crate::geometry::SimplexConfig;
use crate::gridfn::GridFunction;
use crate::rng::{stream, tag};

/// Powers `e_1, …, e_k` of the majorizing product: with `q = m/(m−1)`,
/// `e_1 = e_2 = q^{k−1}` and `e_j = q^{k+1−j}` for `j ≥ 3`.
pub fn majorization_exponents(m: u32, k: usize) -> Result<Vec<Q>> {
    if m < 2 {
        return Err(Error::arg(format!("m must be at least 2, got {m}")));
    }
    if k < 2 {
        return Err(Error::arg(format!("k must be at least 2, got {k}")));
    }
    let q = ratio(m as i64, m as i64 - 1);
    let pow = |n: usize| -> Q { (0..n).fold(Q::one(), |acc, _| acc * q) };
    Ok((1..=k)
        .map(|j| if j <= 2 { pow(k - 1) } else { pow(k + 1 - j) })
        .collect())
}

/// One point of the majorization comparison: the simplex average on the
/// left and the product of spherical averages of powers on the right,
/// both estimated from the same rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorizationSample {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    /// Delta-method standard error of `lhs − rhs`.
    pub diff_stderr: f64,
}

impl MajorizationSample {
    /// `lhs / rhs`, or `None` when both vanish.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs.value > 0.0).then(|| self.lhs.value / self.rhs.value)
    }
}

/// Estimates `S^k(f_1,…,f_k)(x)` and
/// `Π_j S^1(f_j^{e_j})(x)^{1/e_j}` with common rotations. The spherical
/// averages reuse the rotated vertices: `R u_j` is uniform on the sphere for
/// each `j`, so `mean_R f_j(x − R u_j)^{e_j}` estimates `S^1(f_j^{e_j})(x)`.
pub fn majorization_check(
    m: u32,
    simplex: &SimplexConfig,
    inputs: &[&GridFunction],
    x: &[f64],
    cfg: &McConfig,
    index: u64,
) -> Result<MajorizationSample> {
    let k = simplex.k;
    let exps: Vec<f64> = majorization_exponents(m, k)?
        .iter()
        .map(|e| e.to_f64().unwrap_or(f64::NAN))
        .collect();
    if inputs.len() != k {
        return Err(Error::arg(format!("expected {k} inputs, got {}", inputs.len())));
    }
    let d = simplex.d;
    if x.len() != d || inputs.iter().any(|f| f.d() != d) {
        return Err(Error::dim("inputs and point must live in the simplex dimension"));
    }
    let n = cfg.n_samples.max(1);
    let placement = Placement::from_simplex(simplex, cfg.group);
    let mut rng = stream(cfg.seed, tag::MAJORIZE, index);
    let mut scratch = vec![0.0; placement.scratch_len()];
    let mut w = vec![0.0; k * d];
    let mut y = vec![0.0; d];
    // column 0: product; columns 1..=k: f_j^{e_j}
    let width = k + 1;
    let mut rows = vec![0.0; n * width];
    for s in 0..n {
        placement.draw(&mut rng, &mut scratch, &mut w);
        let row = &mut rows[s * width..(s + 1) * width];
        let mut prod = 1.0;
        for (j, f) in inputs.iter().enumerate() {
            for a in 0..d {
                y[a] = x[a] - w[j * d + a];
            }
            let v = f.eval(&y);
            prod *= v;
            row[j + 1] = if v == 0.0 { 0.0 } else { v.powf(exps[j]) };
        }
        row[0] = prod;
    }
    let nf = n as f64;
    let mut mean = vec![0.0; width];
    for row in rows.chunks_exact(width) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut cov = vec![0.0; width * width];
    for row in rows.chunks_exact(width) {
        for a in 0..width {
            let da = row[a] - mean[a];
            if da == 0.0 {
                continue;
            }
            for b in 0..width {
                cov[a * width + b] += da * (row[b] - mean[b]);
            }
        }
    }
    let denom = if n > 1 { nf - 1.0 } else { 1.0 };
    cov.iter_mut().for_each(|c| *c /= denom);

    let rhs: f64 = mean[1..].iter().zip(&exps).map(|(a, e)| a.powf(e.recip())).product();
    let lhs = mean[0];
    // gradient of rhs with respect to the means of f_j^{e_j}
    let mut grad = vec![0.0; width];
    if rhs > 0.0 {
        for j in 0..k {
            grad[j + 1] = rhs / (exps[j] * mean[j + 1]);
        }
    }
    let quad = |g: &[f64]| -> f64 {
        let mut s = 0.0;
        for a in 0..width {
            for b in 0..width {
                s += g[a] * cov[a * width + b] * g[b];
            }
        }
        (s.max(0.0) / nf).sqrt()
    };
    let rhs_stderr = quad(&grad);
    grad[1..].iter_mut().for_each(|g| *g = -*g);
    grad[0] = 1.0;
    let diff_stderr = quad(&grad);
    let est = |value, stderr| McEstimate {
        value,
        stderr,
        n_samples: n as u64,
        seed: cfg.seed,
    };
    Ok(MajorizationSample {
        lhs: est(lhs, cov[0].max(0.0).sqrt() / nf.sqrt()),
        rhs: est(rhs, rhs_stderr),
        diff_stderr,
    })
}

/// The majorizing product `Π_j S^1(f_j^{e_j})(x)^{1/e_j}` at `x`, without
/// the unspecified constant.
pub fn majorization_rhs(
    m: u32,
    simplex: &SimplexConfig,
    inputs: &[&GridFunction],
    x: &[f64],
    cfg: &McConfig,
    index: u64,
) -> Result<McEstimate> {
    majorization_check(m, simplex, inputs, x, cfg, index).map(|s| s.rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_simplex_vertices;
    use crate::gridfn::Grid;

    fn bump(c: [f64; 2], s: f64) -> GridFunction {
        GridFunction::from_fn(Grid::new(vec![-3.0; 2], vec![3.0; 2], 0.125).unwrap(), |x| {
            (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / s).exp()
        })
    }

    #[test]
    fn exponents_follow_powers_of_q() {
        assert_eq!(majorization_exponents(2, 2).unwrap(), vec![ratio(2, 1), ratio(2, 1)]);
        assert_eq!(
            majorization_exponents(3, 4).unwrap(),
            vec![ratio(27, 8), ratio(27, 8), ratio(9, 4), ratio(3, 2)]
        );
        assert!(majorization_exponents(1, 2).is_err());
        assert!(majorization_exponents(2, 1).is_err());
    }

    #[test]
    fn constants_give_one() {
        let s = regular_simplex_vertices(2, 2).unwrap();
        let one = GridFunction::from_fn(Grid::new(vec![-3.0; 2], vec![3.0; 2], 0.25).unwrap(), |_| 1.0);
        let r = majorization_check(2, &s, &[&one, &one], &[0.0, 0.0], &McConfig::new(256, 0), 0).unwrap();
        assert!((r.lhs.value - 1.0).abs() < 1e-12);
        assert!((r.rhs.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_schwarz_holds_on_the_sample() {
        let s = regular_simplex_vertices(2, 2).unwrap();
        let f = bump([0.2, 0.1], 0.5);
        let g = bump([-0.3, 0.4], 1.5);
        for i in 0..20 {
            let x = [0.1 * i as f64 - 1.0, 0.05 * i as f64];
            let r = majorization_check(2, &s, &[&f, &g], &x, &McConfig::new(512, 11), i).unwrap();
            assert!(r.lhs.value <= r.rhs.value * (1.0 + 1e-12), "{r:?}");
        }
    }

    #[test]
    fn rhs_is_monotone_in_first_input() {
        let s = regular_simplex_vertices(2, 2).unwrap();
        let f = bump([0.2, 0.1], 0.5);
        let bigger = GridFunction {
            values: f.values.iter().map(|v| v + 0.1).collect(),
            ..f.clone()
        };
        let g = bump([-0.3, 0.4], 1.5);
        let cfg = McConfig::new(512, 4);
        let a = majorization_rhs(2, &s, &[&f, &g], &[0.5, 0.0], &cfg, 7).unwrap();
        let b = majorization_rhs(2, &s, &[&bigger, &g], &[0.5, 0.0], &cfg, 7).unwrap();
        assert!(b.value >= a.value);
    }
}
