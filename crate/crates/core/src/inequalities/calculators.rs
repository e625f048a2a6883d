use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exponents::{q, Exponent, ExponentTuple, Q};

fn fin(v: Q) -> Exponent {
    Exponent::Finite(v)
}

fn pow(base: Q, n: usize) -> Q {
    (0..n).fold(Q::one(), |acc, _| acc * base)
}

/// Distinct reorderings of the input exponents, starting with `e` itself.
fn permutations(e: &ExponentTuple) -> Vec<ExponentTuple> {
    let k = e.arity();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut out: Vec<ExponentTuple> = Vec::new();
    loop {
        let t = e.permuted(&idx);
        if !out.iter().any(|o| o.p == t.p) {
            out.push(t);
        }
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| idx[i - 1] < idx[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| idx[j] > idx[i - 1]).expect("pivot");
        idx.swap(i - 1, j);
        idx[i..].reverse();
    }
    out
}

/// `q^{k−1} / (2 + q + … + q^{k−2})`, the diagonal target exponent of the
/// majorization bounds.
pub fn clm_diagonal_r(m: u32, k: usize) -> Result<Q> {
    if m < 2 || k < 2 {
        return Err(Error::arg(format!("need m >= 2 and k >= 2, got m={m}, k={k}")));
    }
    let qv = q(m as i64, m as i64 - 1);
    let denom = (0..=k - 2).fold(Q::one(), |acc, i| acc + pow(qv, i));
    Ok(pow(qv, k - 1) / denom)
}

/// Exponent tuples from the majorization bounds, valid for `d ≥ mk`:
/// the Hölder diagonal `(kr, …, kr; r)` and the improving tuple with
/// `p_1 = q^{k−1}(d+1)/d`, `p_j = q^{k+1−j}(d+1)/d`, `r = (d+1) r_diag`,
/// with all reorderings of the latter.
pub fn clm_exponents(m: u32, k: usize, d: usize) -> Result<Vec<ExponentTuple>> {
    let r = clm_diagonal_r(m, k)?;
    if d < m as usize * k {
        return Err(Error::dim(format!("requires d >= mk = {}, got d={d}", m as usize * k)));
    }
    let qv = q(m as i64, m as i64 - 1);
    let kq = Q::from_integer(k as i64);
    let mut out = vec![ExponentTuple::holder(vec![fin(kq * r); k], fin(r)).with_label("majorization diagonal")];
    let lift = q(d as i64 + 1, d as i64);
    let p: Vec<Exponent> = (1..=k)
        .map(|j| if j == 1 { fin(pow(qv, k - 1) * lift) } else { fin(pow(qv, k + 1 - j) * lift) })
        .collect();
    let improving = ExponentTuple::new(p, fin(r * Q::from_integer(d as i64 + 1))).with_label("majorization improving");
    out.extend(permutations(&improving));
    Ok(out)
}

/// Exponent tuples valid in dimensions `d ≥ k`: the restricted strong-type
/// tuples `(k, …, k; k)` and `(k(d+1)/d, …; d+1)`, the Hölder vertices
/// `q_σ(1) = (d+1)/d`, `q_σ(j) = (k−1)(d+1)/d`, `r = (d+1)/(2d)`, and the
/// diagonal endpoint `(kr, …, kr; r)` at `r = (d+1)/(2d)`.
pub fn lower_dim_exponents(k: usize, d: usize) -> Result<Vec<ExponentTuple>> {
    if k < 1 || d < k {
        return Err(Error::dim(format!("requires 1 <= k <= d, got k={k}, d={d}")));
    }
    let (ki, di) = (k as i64, d as i64);
    // both restricted tuples degenerate onto the Hölder line when k = d = 1
    let mut out = vec![
        ExponentTuple {
            declared_holder: k == 1,
            ..ExponentTuple::new(vec![Exponent::int(ki); k], Exponent::int(ki)).with_label("restricted (k,...,k;k)")
        },
        ExponentTuple {
            declared_holder: d == 1,
            ..ExponentTuple::new(vec![fin(q(ki * (di + 1), di)); k], Exponent::int(di + 1))
                .with_label("restricted improving")
        },
    ];
    let r = q(di + 1, 2 * di);
    if k >= 2 {
        let mut p = vec![fin(q((ki - 1) * (di + 1), di)); k];
        p[0] = fin(q(di + 1, di));
        out.extend(permutations(&ExponentTuple::holder(p, fin(r)).with_label("hull vertex")));
    }
    out.push(ExponentTuple::holder(vec![fin(r * Q::from_integer(ki)); k], fin(r)).with_label("diagonal endpoint"));
    Ok(out)
}

/// The two improving triples `(1/p, 1/q, 1/r)` for the triangle operator:
/// `(d/(d+1), d/(2(d+1)), (d+2)/(2d+2))` and its swap.
pub fn improving_triples_t(d: usize) -> Result<[[Q; 3]; 2]> {
    if d < 2 {
        return Err(Error::dim(format!("requires d >= 2, got {d}")));
    }
    let di = d as i64;
    let a = q(di, di + 1);
    let b = q(di, 2 * (di + 1));
    let c = q(di + 2, 2 * di + 2);
    Ok([[a, b, c], [b, a, c]])
}

/// The triple as an exponent tuple `(p, q; r)`.
pub fn triple_to_tuple(t: &[Q; 3]) -> Result<ExponentTuple> {
    let e = |v: Q| if v.is_zero() { Ok(Exponent::Infinite) } else { Exponent::finite(v.recip()) };
    Ok(ExponentTuple::new(vec![e(t[0])?, e(t[1])?], e(t[2])?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::holder_consistent;

    fn tuple(p: &[Q], r: Q) -> (Vec<Exponent>, Exponent) {
        (p.iter().map(|v| fin(*v)).collect(), fin(r))
    }

    #[test]
    fn clm_examples() {
        assert_eq!(clm_diagonal_r(2, 2).unwrap(), Q::one());
        let e = clm_exponents(2, 2, 4).unwrap();
        let (p, r) = tuple(&[q(2, 1), q(2, 1)], q(1, 1));
        assert_eq!((e[0].p.clone(), e[0].r), (p, r));
        let (p, r) = tuple(&[q(5, 2), q(5, 2)], q(5, 1));
        assert_eq!((e[1].p.clone(), e[1].r), (p, r));
        assert_eq!(e.len(), 2);
        assert!(clm_exponents(2, 2, 3).is_err());
        assert!(clm_exponents(1, 2, 8).is_err());
    }

    #[test]
    fn clm_permutations_are_closed() {
        let e = clm_exponents(2, 3, 6).unwrap();
        let improving: Vec<_> = e.iter().filter(|t| !t.declared_holder).collect();
        assert_eq!(improving.len(), 3);
        for t in &improving {
            for perm in [[1, 0, 2], [0, 2, 1], [2, 1, 0]] {
                let s = t.permuted(&perm);
                assert!(improving.iter().any(|u| u.p == s.p));
            }
        }
        // r = q^2 / (1 + 1 + q) at q = 2
        assert_eq!(clm_diagonal_r(2, 3).unwrap(), q(1, 1));
        assert_eq!(clm_diagonal_r(3, 3).unwrap(), q(9, 4) / q(7, 2));
    }

    #[test]
    fn declared_holder_matches_exact_check() {
        for (m, k, d) in [(2, 2, 4), (2, 3, 6), (3, 2, 7), (4, 3, 12)] {
            for t in clm_exponents(m, k, d).unwrap() {
                assert_eq!(holder_consistent(&t), t.declared_holder, "{t}");
            }
        }
        for (k, d) in [(1, 1), (2, 2), (2, 3), (3, 3), (3, 5), (4, 4)] {
            for t in lower_dim_exponents(k, d).unwrap() {
                assert_eq!(holder_consistent(&t), t.declared_holder, "{t}");
            }
        }
    }

    #[test]
    fn lower_dim_examples() {
        let e = lower_dim_exponents(2, 2).unwrap();
        let has = |p: &[Q], r: Q| {
            let (p, r) = tuple(p, r);
            e.iter().any(|t| t.p == p && t.r == r)
        };
        assert!(has(&[q(3, 2), q(3, 2)], q(3, 4)));
        assert!(has(&[q(3, 1), q(3, 1)], q(3, 1)));
        assert!(has(&[q(2, 1), q(2, 1)], q(2, 1)));
        let e3 = lower_dim_exponents(3, 3).unwrap();
        assert_eq!(e3[0].p, vec![Exponent::int(3); 3]);
        assert_eq!(e3[0].r, Exponent::int(3));
        assert!(lower_dim_exponents(3, 2).is_err());
    }

    #[test]
    fn triangle_triples() {
        let [a, b] = improving_triples_t(2).unwrap();
        assert_eq!(a, [q(2, 3), q(1, 3), q(2, 3)]);
        assert_eq!(b, [q(1, 3), q(2, 3), q(2, 3)]);
        for d in 2..10 {
            let [a, b] = improving_triples_t(d).unwrap();
            assert_eq!((a[0], a[1]), (b[1], b[0]));
            assert!(a[2] < a[0] + a[1]);
        }
        let t = triple_to_tuple(&a).unwrap();
        assert_eq!(t.p, vec![fin(q(3, 2)), fin(q(3, 1))]);
        assert!(improving_triples_t(1).is_err());
    }
}
