use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::exponents::{holder_consistent, ExponentTuple};
use crate::gridfn::GridFunction;

/// Lattice separation beyond which the simplex operators vanish on inputs
/// supported in unit cubes: two vertices of a side-1 simplex are at most
/// distance 1 apart, so their cubes differ by at most 2 in every coordinate.
pub const L1_LATTICE_CONSTANT: i64 = 2;

/// `‖f · 1_{Q_l}‖_p` for every unit cube `Q_l = l + [0,1)^d` meeting the
/// support of `f`, keyed by `l`.
pub fn cube_norms(f: &GridFunction, p: f64) -> Result<BTreeMap<Vec<i64>, f64>> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Exponent(format!("L^p exponent must be positive, got {p}")));
    }
    let d = f.d();
    let mut x = vec![0.0; d];
    let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (i, v) in f.values.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        f.grid.center_into(i, &mut x);
        let l: Vec<i64> = x.iter().map(|c| c.floor() as i64).collect();
        let e = acc.entry(l).or_insert(0.0);
        if p.is_infinite() {
            *e = e.max(*v);
        } else {
            *e += v.powf(p);
        }
    }
    if p.is_finite() {
        let cell = f.grid.cell_volume();
        acc.values_mut().for_each(|s| *s = (*s * cell).powf(p.recip()));
    }
    Ok(acc)
}

/// Right-hand side of the cube decomposition:
/// `Σ_{d_2,…,d_k ∈ F_N} (Σ_l Π_i ‖f_i 1_{Q_l + d_i}‖_{p_i}^r)^{1/r}` with
/// `d_1 = 0` and `F_N = {l : ‖l‖_∞ ≤ N}`. The tuple must satisfy
/// `Σ 1/p_i = 1/r > 1` and `s` must lie in `[r, 1]`.
pub fn cube_decomposition_bound(inputs: &[&GridFunction], e: &ExponentTuple, s: f64, n: i64) -> Result<f64> {
    let k = inputs.len();
    if e.arity() != k {
        return Err(Error::Exponent(format!("tuple has {} exponents for {k} inputs", e.arity())));
    }
    if !holder_consistent(e) {
        return Err(Error::Exponent(format!("{e} is not on the Hölder line")));
    }
    let r = e.r.to_f64();
    if r >= 1.0 {
        return Err(Error::Exponent(format!("target exponent must be below 1, got {}", e.r)));
    }
    if !(s >= r - 1e-12 && s <= 1.0 + 1e-12) {
        return Err(Error::Exponent(format!("s = {s} must lie in [{r}, 1]")));
    }
    if n < 0 {
        return Err(Error::arg("offset radius N must be nonnegative"));
    }
    let d = inputs[0].d();
    if inputs.iter().any(|f| f.d() != d) {
        return Err(Error::dim("all inputs must share one dimension"));
    }
    let norms: Vec<HashMap<Vec<i64>, f64>> = inputs
        .iter()
        .zip(&e.p)
        .map(|(f, p)| cube_norms(f, p.to_f64()).map(|m| m.into_iter().collect()))
        .collect::<Result<_>>()?;
    let base: Vec<(&Vec<i64>, f64)> = {
        let mut v: Vec<_> = norms[0].iter().map(|(l, x)| (l, *x)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    };
    // all offset tuples (d_2, …, d_k) ∈ F_N^{k−1}
    let side = (2 * n + 1) as usize;
    let per = side.pow(d as u32);
    let total = per.pow((k - 1) as u32);
    let mut offset = vec![0i64; d];
    let mut shifted = vec![0i64; d];
    let mut bound = 0.0;
    for t in 0..total {
        let mut inner = 0.0;
        for (l, n1) in &base {
            let mut prod = n1.powf(r);
            let mut rest = t;
            for norms_i in &norms[1..] {
                let mut code = rest % per;
                rest /= per;
                for o in offset.iter_mut() {
                    *o = (code % side) as i64 - n;
                    code /= side;
                }
                for a in 0..d {
                    shifted[a] = l[a] + offset[a];
                }
                match norms_i.get(&shifted) {
                    Some(v) => prod *= v.powf(r),
                    None => {
                        prod = 0.0;
                        break;
                    }
                }
            }
            inner += prod;
        }
        if inner > 0.0 {
            bound += inner.powf(r.recip());
        }
    }
    Ok(bound)
}

/// True iff every positive cell of `output` lies within distance `radius`
/// of the support of some input. Distances are measured between cell
/// centers with a slack of one cell diagonal.
pub fn support_radius_check(output: &GridFunction, inputs: &[&GridFunction], radius: f64) -> bool {
    let d = output.d();
    let h = inputs
        .iter()
        .chain(std::iter::once(&output))
        .flat_map(|f| f.grid.h.iter().copied())
        .fold(0.0, f64::max);
    let reach = radius + (d as f64).sqrt() * h;
    let bucket = reach.max(1e-9);
    let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|c| (c / bucket).floor() as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<Vec<f64>>> = HashMap::new();
    for f in inputs {
        for (i, v) in f.values.iter().enumerate() {
            if *v > 0.0 {
                let c = f.grid.center(i);
                buckets.entry(key(&c)).or_default().push(c);
            }
        }
    }
    let neighbors = 3usize.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut probe = vec![0i64; d];
    for (i, v) in output.values.iter().enumerate() {
        if *v <= 0.0 {
            continue;
        }
        output.grid.center_into(i, &mut x);
        let base = key(&x);
        let mut found = false;
        'search: for code in 0..neighbors {
            let mut c = code;
            for a in 0..d {
                probe[a] = base[a] + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(pts) = buckets.get(&probe) {
                for p in pts {
                    let dist2: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist2 <= reach * reach {
                        found = true;
                        break 'search;
                    }
                }
            }
        }
        if !found {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{q, Exponent};
    use crate::gridfn::{lp_norm, rasterize, Grid};
    use crate::operators::{spherical_average, McConfig};
    use crate::shape::ShapeSet;

    fn tuple(p: &[(i64, i64)], r: (i64, i64)) -> ExponentTuple {
        ExponentTuple::holder(
            p.iter().map(|(a, b)| Exponent::finite(q(*a, *b)).unwrap()).collect(),
            Exponent::finite(q(r.0, r.1)).unwrap(),
        )
    }

    fn cube_fn(corner: [f64; 2]) -> GridFunction {
        GridFunction::from_fn(Grid::new(vec![-3.0; 2], vec![3.0; 2], 0.125).unwrap(), |x| {
            if x[0] >= corner[0] && x[0] < corner[0] + 1.0 && x[1] >= corner[1] && x[1] < corner[1] + 1.0 {
                1.0 + x[0] * x[0]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn cube_norms_partition_l1() {
        let f = GridFunction::from_fn(Grid::new(vec![-2.0; 2], vec![2.0; 2], 0.25).unwrap(), |x| {
            (3.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        });
        let total: f64 = cube_norms(&f, 1.0).unwrap().values().sum();
        assert!((total - lp_norm(&f, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn single_cube_bound_is_product_of_norms() {
        let e = tuple(&[(3, 2), (3, 2)], (3, 4));
        let f = cube_fn([0.0, 0.0]);
        let g = cube_fn([0.0, 0.0]);
        let want = lp_norm(&f, 1.5).unwrap() * lp_norm(&g, 1.5).unwrap();
        for n in 0..3 {
            let b = cube_decomposition_bound(&[&f, &g], &e, 0.75, n).unwrap();
            assert!((b - want).abs() < 1e-12 * want, "{b} {want}");
        }
        let adj = cube_fn([1.0, 0.0]);
        let b = cube_decomposition_bound(&[&f, &adj], &e, 0.75, 1).unwrap();
        let want = lp_norm(&f, 1.5).unwrap() * lp_norm(&adj, 1.5).unwrap();
        assert!((b - want).abs() < 1e-12 * want);
        assert_eq!(cube_decomposition_bound(&[&f, &adj], &e, 0.75, 0).unwrap(), 0.0);
    }

    #[test]
    fn bound_grows_with_n() {
        let e = tuple(&[(3, 2), (3, 2)], (3, 4));
        let f = GridFunction::from_fn(Grid::new(vec![-3.0; 2], vec![3.0; 2], 0.25).unwrap(), |x| {
            (4.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        });
        let mut last = 0.0;
        for n in 0..4 {
            let b = cube_decomposition_bound(&[&f, &f], &e, 0.75, n).unwrap();
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn bound_rejects_bad_tuples() {
        let f = cube_fn([0.0, 0.0]);
        let not_holder = ExponentTuple::new(vec![Exponent::int(2), Exponent::int(2)], Exponent::int(2));
        assert!(cube_decomposition_bound(&[&f, &f], &not_holder, 1.0, 1).is_err());
        let banach = tuple(&[(2, 1), (2, 1)], (1, 1));
        assert!(cube_decomposition_bound(&[&f, &f], &banach, 1.0, 1).is_err());
        let ok = tuple(&[(3, 2), (3, 2)], (3, 4));
        assert!(cube_decomposition_bound(&[&f, &f], &ok, 0.5, 1).is_err());
    }

    #[test]
    fn support_radius_examples() {
        let f = rasterize(&ShapeSet::ball(vec![0.0, 0.0], 1.0), vec![-1.0; 2], vec![1.0; 2], 0.0625).unwrap();
        let out = spherical_average(&f, &McConfig::new(64, 2)).unwrap();
        assert!(support_radius_check(&out.values, &[&f], 1.0));
        assert!(support_radius_check(&GridFunction::zeros(out.grid().clone()), &[&f], 1.0));
        let mut planted = GridFunction::zeros(Grid::new(vec![-4.0; 2], vec![4.0; 2], 0.0625).unwrap());
        let i = planted.grid.locate(&[3.5, 3.5]).unwrap();
        planted.values[i] = 1.0;
        assert!(!support_radius_check(&planted, &[&f], 1.0));
    }
}
