//! Random nonnegative test inputs.

use rand::Rng;
use simplex_core::{Grid, GridFunction};

/// One to three Gaussian bumps with centres in `[-1, 1]^d`, widths in
/// `[0.25, 0.7]` and amplitudes in `[0.5, 1.5]`, sampled on `grid`.
pub fn smooth_bumps<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> GridFunction {
    let d = grid.d();
    let n = rng.random_range(1..=3);
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .map(|_| {
            let c = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (c, rng.random_range(0.25..0.7), rng.random_range(0.5..1.5))
        })
        .collect();
    GridFunction::from_fn(grid.clone(), |x| {
        bumps
            .iter()
            .map(|(c, s, a)| {
                let r2: f64 = x.iter().zip(c).map(|(u, v)| (u - v) * (u - v)).sum();
                a * (-r2 / (2.0 * s * s)).exp()
            })
            .sum()
    })
}

/// Compactly supported input concentrated in a few unit lattice cubes of
/// `[-2, 2)^d`: each chosen cube holds a bump `a (1 − |x − c|²/ρ²)_+²` with
/// centre `c` inside the cube and `ρ ∈ [0.1, 0.5]`.
pub fn multi_cube<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> GridFunction {
    let d = grid.d();
    let n = rng.random_range(1..=3);
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .map(|_| {
            let c = (0..d)
                .map(|_| rng.random_range(-2i64..2) as f64 + rng.random_range(0.2..0.8))
                .collect();
            (c, rng.random_range(0.1..0.5), rng.random_range(0.5..2.0))
        })
        .collect();
    GridFunction::from_fn(grid.clone(), |x| {
        bumps
            .iter()
            .map(|(c, rho, a)| {
                let r2: f64 = x.iter().zip(c).map(|(u, v)| (u - v) * (u - v)).sum();
                let t = 1.0 - r2 / (rho * rho);
                if t > 0.0 {
                    a * t * t
                } else {
                    0.0
                }
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use simplex_core::rng::stream;

    #[test]
    fn generators_are_nonnegative_and_nonzero() {
        let grid = Grid::new(vec![-3.0; 2], vec![3.0; 2], 0.125).unwrap();
        let mut rng = stream(1, 2, 3);
        for _ in 0..10 {
            for f in [smooth_bumps(&grid, &mut rng), multi_cube(&grid, &mut rng)] {
                assert!(f.values.iter().all(|v| *v >= 0.0));
                assert!(f.max_value() > 0.0);
            }
        }
    }

    #[test]
    fn multi_cube_inputs_are_compact() {
        let grid = Grid::new(vec![-3.0; 2], vec![3.0; 2], 0.125).unwrap();
        let f = multi_cube(&grid, &mut stream(4, 5, 6));
        let b = f.support_bounds().unwrap();
        assert!(b.lo.iter().all(|v| *v >= -2.6) && b.hi.iter().all(|v| *v <= 2.6));
    }
}
