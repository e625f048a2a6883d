use rand::Rng;
use serde::{Deserialize, Serialize};

use super::averages::Placement;
use super::{McConfig, McEstimate, OperatorKind};
use crate::error::{Error, Result};
use crate::gridfn::GridFunction;
use crate::rng::{stream, tag};
use crate::stats::Moments;

/// `∫ f · S^1(g) dx` by stratified Monte Carlo over the cells of `f`'s grid:
/// every draw pairs a uniform point of the cell with a uniform direction, so
/// shape-backed inputs are integrated without rasterization error.
pub fn l1_pairing(f: &GridFunction, g: &GridFunction, cfg: &McConfig) -> Result<McEstimate> {
    let d = f.d();
    if g.d() != d {
        return Err(Error::dim("pairing inputs must share one dimension"));
    }
    let placement = Placement::new(OperatorKind::Spherical, d, cfg.group)?;
    let (Some(f_support), g_support) = (f.support_bounds(), g.support_bounds()) else {
        return Ok(McEstimate::exact(0.0, cfg.seed));
    };
    let Some(g_support) = g_support else {
        return Ok(McEstimate::exact(0.0, cfg.seed));
    };
    let grid = &f.grid;
    let cell = grid.cell_volume();
    let half_diag = grid.h.iter().map(|h| h * h).sum::<f64>().sqrt() / 2.0;
    let terms = cfg.execution.map(grid.len(), |idx| {
        let mut c = vec![0.0; d];
        grid.center_into(idx, &mut c);
        if f_support.distance(&c) > half_diag || g_support.distance(&c) > 1.0 + half_diag + 1e-12 {
            return (0.0, 0.0);
        }
        let mut rng = stream(cfg.seed, tag::SPHERICAL_AVG, idx as u64);
        let (mut x, mut w, mut y) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut m = Moments::new();
        for _ in 0..cfg.n_samples {
            for ((xi, ci), hi) in x.iter_mut().zip(&c).zip(&grid.h) {
                *xi = ci + hi * (rng.random::<f64>() - 0.5);
            }
            placement.draw(&mut rng, &mut [], &mut w);
            let fx = f.eval(&x);
            let v = if fx == 0.0 {
                0.0
            } else {
                y.iter_mut().zip(x.iter().zip(&w)).for_each(|(o, (a, b))| *o = a - b);
                fx * g.eval(&y)
            };
            m.push(v);
        }
        (cell * m.mean(), (cell * m.stderr()).powi(2))
    });
    let (value, var) = terms.iter().fold((0.0, 0.0), |(a, b), (v, s)| (a + v, b + s));
    Ok(McEstimate {
        value,
        stderr: var.sqrt(),
        n_samples: cfg.n_samples as u64,
        seed: cfg.seed,
    })
}

/// Both sides of `⟨T(f,g), h⟩ = ⟨f, T(g,h)⟩` from one joint sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointResidual {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    /// `|lhs − rhs|`.
    pub residual: f64,
    /// Standard error of the paired difference.
    pub stderr: f64,
}

const ADJOINT_CHUNK: usize = 4096;

/// Estimates `⟨T(f,g), h⟩` and `⟨f, T(g,h)⟩` by drawing `n_samples` pairs
/// `(x, R)` with `x` uniform on a box covering the supports of `f` and `h`
/// and `R` Haar, and evaluating both integrands on the same pairs.
pub fn adjoint_residual(f: &GridFunction, g: &GridFunction, h: &GridFunction, cfg: &McConfig) -> Result<AdjointResidual> {
    let d = f.d();
    if g.d() != d || h.d() != d {
        return Err(Error::dim("adjoint inputs must share one dimension"));
    }
    let placement = Placement::new(OperatorKind::TRIANGLE, d, cfg.group)?;
    let zero = || AdjointResidual {
        lhs: McEstimate::exact(0.0, cfg.seed),
        rhs: McEstimate::exact(0.0, cfg.seed),
        residual: 0.0,
        stderr: 0.0,
    };
    let (Some(bf), Some(bh)) = (f.support_bounds(), h.support_bounds()) else {
        return Ok(zero());
    };
    if g.support_bounds().is_none() {
        return Ok(zero());
    }
    let domain = bf.hull(&bh);
    let vol = domain.volume();
    let n = cfg.n_samples;
    let chunks = n.div_ceil(ADJOINT_CHUNK);
    let partial = cfg.execution.map(chunks, |c| {
        let mut rng = stream(cfg.seed, tag::ADJOINT, c as u64);
        let mut scratch = vec![0.0; placement.scratch_len()];
        let mut w = vec![0.0; 2 * d];
        let mut x = vec![0.0; d];
        let mut y1 = vec![0.0; d];
        let mut y2 = vec![0.0; d];
        let mut acc = [Moments::new(); 3];
        let count = ADJOINT_CHUNK.min(n - c * ADJOINT_CHUNK);
        for _ in 0..count {
            for (xi, (lo, hi)) in x.iter_mut().zip(domain.lo.iter().zip(&domain.hi)) {
                *xi = lo + (hi - lo) * rng.random::<f64>();
            }
            placement.draw(&mut rng, &mut scratch, &mut w);
            for i in 0..d {
                y1[i] = x[i] - w[i];
                y2[i] = x[i] - w[d + i];
            }
            let hx = h.eval(&x);
            let lhs = if hx == 0.0 { 0.0 } else { vol * hx * f.eval(&y1) * g.eval(&y2) };
            let fx = f.eval(&x);
            let rhs = if fx == 0.0 { 0.0 } else { vol * fx * g.eval(&y1) * h.eval(&y2) };
            acc[0].push(lhs);
            acc[1].push(rhs);
            acc[2].push(lhs - rhs);
        }
        acc
    });
    let acc = partial
        .iter()
        .fold([Moments::new(); 3], |a, b| [a[0].merge(&b[0]), a[1].merge(&b[1]), a[2].merge(&b[2])]);
    let est = |m: &Moments| McEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        n_samples: n as u64,
        seed: cfg.seed,
    };
    Ok(AdjointResidual {
        lhs: est(&acc[0]),
        rhs: est(&acc[1]),
        residual: acc[2].mean().abs(),
        stderr: acc[2].stderr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{rasterize, Grid};
    use crate::shape::ShapeSet;
    use std::f64::consts::PI;

    fn disk(c: [f64; 2], r: f64, half: f64, h: f64) -> GridFunction {
        rasterize(&ShapeSet::ball(c.to_vec(), r), vec![-half; 2], vec![half; 2], h).unwrap()
    }

    #[test]
    fn pairing_of_small_disk_against_large_disk_is_its_area() {
        let f = disk([0.0, 0.0], 1.0, 1.0, 1.0 / 32.0);
        let g = disk([0.0, 0.0], 3.0, 3.0, 1.0 / 32.0);
        let e = l1_pairing(&f, &g, &McConfig::new(64, 1)).unwrap();
        assert!((e.value - PI).abs() < 3.0 * e.stderr + 1e-9, "{e:?}");
        assert!((e.value / PI - 1.0).abs() < 0.02, "{}", e.value);
        let zero = GridFunction::zeros(g.grid.clone());
        assert_eq!(l1_pairing(&f, &zero, &McConfig::new(64, 1)).unwrap().value, 0.0);
    }

    #[test]
    fn pairing_is_symmetric() {
        let f = disk([0.3, 0.0], 0.5, 2.0, 1.0 / 16.0);
        let g = disk([-0.4, 0.2], 0.7, 2.0, 1.0 / 16.0);
        let cfg = McConfig::new(2048, 5);
        let a = l1_pairing(&f, &g, &cfg).unwrap();
        let b = l1_pairing(&g, &f, &cfg).unwrap();
        let tol = 3.0 * a.stderr.hypot(b.stderr) + 0.05 * a.value;
        assert!((a.value - b.value).abs() < tol, "{a:?} {b:?}");
    }

    #[test]
    fn adjoint_identity_holds_within_noise() {
        let f = disk([0.0, 0.0], 2.0, 2.0, 1.0 / 16.0);
        // identical inputs make the two integrands coincide sample by sample
        let r = adjoint_residual(&f, &f, &f, &McConfig::new(200_000, 3)).unwrap();
        assert!(r.residual <= 3.0 * r.stderr, "{r:?}");
        assert!(r.lhs.value > 1.0);

        let g = disk([0.5, 0.0], 0.6, 2.0, 1.0 / 16.0);
        let h = GridFunction::from_fn(Grid::new(vec![-2.0; 2], vec![2.0; 2], 1.0 / 16.0).unwrap(), |x| {
            (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        });
        let r = adjoint_residual(&f, &g, &h, &McConfig::new(200_000, 4)).unwrap();
        assert!(r.residual < 3.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn adjoint_residual_degenerate_and_linear() {
        let f = disk([0.0, 0.0], 1.0, 2.0, 1.0 / 8.0);
        let zero = GridFunction::zeros(f.grid.clone());
        let cfg = McConfig::new(10_000, 9);
        assert_eq!(adjoint_residual(&f, &zero, &f, &cfg).unwrap().residual, 0.0);

        let g = disk([0.4, 0.0], 1.0, 2.0, 1.0 / 8.0);
        let base = GridFunction::from_fn(f.grid.clone(), |x| (1.5 - x[0].abs()).max(0.0));
        let a = adjoint_residual(&base, &g, &f, &cfg).unwrap();
        let b = adjoint_residual(&base.scaled(3.0), &g, &f, &cfg).unwrap();
        assert!((b.residual - 3.0 * a.residual).abs() <= 1e-9 * (1.0 + a.residual));
    }
}
