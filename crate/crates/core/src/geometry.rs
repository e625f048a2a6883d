//! Regular simplices, Haar-distributed orthogonal matrices, uniform sphere
//! points, and the frame selection used to localize simplex averages.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which orthogonal group the averages integrate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    /// The full orthogonal group `O(d)`, reflections included.
    #[default]
    Orthogonal,
    /// The rotation group `SO(d)`.
    Special,
}

/// Vertices `u_1, …, u_k` of a unit-side regular simplex with `u_0 = 0`,
/// embedded in the first `k` coordinates of `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    pub d: usize,
    pub k: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl SimplexConfig {
    /// Largest deviation of the vertex Gram matrix from `diag 1, off-diag 1/2`.
    pub fn gram_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for (j, b) in self.vertices.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.5 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }
}

/// Builds the unit regular `k`-simplex in `R^d` from the Cholesky factor of
/// its Gram matrix.
pub fn regular_simplex_vertices(d: usize, k: usize) -> Result<SimplexConfig> {
    if k < 1 || k > d {
        return Err(Error::dim(format!("simplex order k={k} must satisfy 1 <= k <= d={d}")));
    }
    let gram = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.5 });
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("simplex Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let vertices = (0..k)
        .map(|i| {
            let mut v = vec![0.0; d];
            for j in 0..=i {
                v[j] = l[(i, j)];
            }
            v
        })
        .collect();
    Ok(SimplexConfig { d, k, vertices })
}

/// An element of `O(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
}

impl Rotation {
    pub const ORTHOGONALITY_TOL: f64 = 1e-10;

    /// Wraps `matrix`, checking `RᵀR = I` entrywise within `1e-10`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::dim("rotation matrix must be square and nonempty"));
        }
        let r = Self { matrix };
        if r.orthogonality_residual() > Self::ORTHOGONALITY_TOL {
            return Err(Error::Degenerate(format!(
                "matrix is not orthogonal (residual {:.3e})",
                r.orthogonality_residual()
            )));
        }
        Ok(r)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// `max |RᵀR − I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim();
        let g = self.matrix.transpose() * &self.matrix;
        (g - DMatrix::<f64>::identity(d, d)).amax()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let out = &self.matrix * DVector::from_column_slice(v);
        out.iter().copied().collect()
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            matrix: &self.matrix * &other.matrix,
        }
    }
}

/// A point on the unit sphere `S^{n-1} ⊂ R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub coords: Vec<f64>,
}

impl SpherePoint {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Fills `out` with a uniform point of `S^{n-1}`, `n = out.len()`.
#[inline]
pub fn fill_sphere_point<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for c in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *c = g;
            s += g * g;
        }
        if s > 1e-300 {
            let inv = s.sqrt().recip();
            out.iter_mut().for_each(|c| *c *= inv);
            return;
        }
    }
}

/// Samples a uniform point of `S^{n-1}` by normalizing a Gaussian vector.
pub fn sample_sphere_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SpherePoint> {
    if n == 0 {
        return Err(Error::dim("sphere dimension must be at least 1"));
    }
    let mut coords = vec![0.0; n];
    fill_sphere_point(rng, &mut coords);
    Ok(SpherePoint { coords })
}

/// Writes the first `k` columns of a Haar-distributed element of the chosen
/// group into `cols` (column-major, `k` blocks of length `d`).
///
/// Gram–Schmidt on Gaussian columns is the QR factorization with a positive
/// diagonal, which is Haar on `O(d)`. For `k = d` the last column is then
/// reflected by a fair coin (`O(d)`) or to force determinant `+1` (`SO(d)`);
/// for `k < d` the first `k` columns have the same law under both groups.
/// In the plane the element is drawn directly as a uniform first column
/// followed, for `O(2)`, by a fair reflection of the second.
pub fn fill_haar_frame<R: Rng + ?Sized>(d: usize, k: usize, group: Group, rng: &mut R, cols: &mut [f64]) {
    debug_assert!(k <= d && cols.len() == d * k);
    if d == 2 {
        // uniform direction by rejection from the square, using two 31-bit
        // halves of one word; the lowest bit is the reflection coin
        const SCALE: f64 = 1.0 / (1u64 << 30) as f64;
        let (c, s, bits) = loop {
            let bits: u64 = rng.random();
            let u = (bits >> 33) as f64 * SCALE - 1.0;
            let v = ((bits >> 2) & 0x7fff_ffff) as f64 * SCALE - 1.0;
            let r2 = u * u + v * v;
            if r2 <= 1.0 && r2 > 1e-12 {
                let inv = r2.sqrt().recip();
                break (u * inv, v * inv, bits);
            }
        };
        cols[0] = c;
        cols[1] = s;
        if k == 2 {
            let sign = match group {
                Group::Orthogonal if bits & 1 == 1 => -1.0,
                _ => 1.0,
            };
            cols[2] = -s * sign;
            cols[3] = c * sign;
        }
        return;
    }
    'retry: loop {
        for c in cols.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        for j in 0..k {
            let (done, rest) = cols.split_at_mut(j * d);
            let col = &mut rest[..d];
            // two passes of modified Gram–Schmidt keep orthogonality at 1e-15
            for _ in 0..2 {
                for i in 0..j {
                    let prev = &done[i * d..(i + 1) * d];
                    let proj = dot(prev, col);
                    col.iter_mut().zip(prev).for_each(|(c, p)| *c -= proj * p);
                }
            }
            let n = norm(col);
            if n < 1e-12 {
                continue 'retry;
            }
            col.iter_mut().for_each(|c| *c /= n);
        }
        break;
    }
    if k == d {
        let flip = match group {
            Group::Orthogonal => rng.random::<bool>(),
            Group::Special => DMatrix::from_column_slice(d, d, cols).determinant() < 0.0,
        };
        if flip {
            cols[(d - 1) * d..].iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// Samples a Haar-distributed element of `O(d)` or `SO(d)`.
pub fn sample_rotation_in<R: Rng + ?Sized>(d: usize, group: Group, rng: &mut R) -> Result<Rotation> {
    if d == 0 {
        return Err(Error::dim("rotation dimension must be at least 1"));
    }
    let mut cols = vec![0.0; d * d];
    fill_haar_frame(d, d, group, rng, &mut cols);
    Ok(Rotation {
        matrix: DMatrix::from_column_slice(d, d, &cols),
    })
}

/// Samples a Haar-distributed element of `O(d)`.
pub fn sample_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Rotation> {
    sample_rotation_in(d, Group::Orthogonal, rng)
}

/// True iff all pairwise distances among `{x, v_1, …, v_k}` equal 1 within `tol`.
pub fn is_unit_simplex_tuple(x: &[f64], v: &[Vec<f64>], tol: f64) -> Result<bool> {
    let d = x.len();
    if v.iter().any(|p| p.len() != d) {
        return Err(Error::dim("all points must share one dimension"));
    }
    let points: Vec<&[f64]> = std::iter::once(x).chain(v.iter().map(Vec::as_slice)).collect();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dist = points[i]
                .iter()
                .zip(points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if (dist - 1.0).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Span membership threshold for frame selection.
pub const FRAME_DEGENERACY_TOL: f64 = 1e-10;
const FRAME_TIE_TOL: f64 = 1e-12;

/// Chooses, for the `i`-th rotation, one simplex vertex `u_{m_i}` with
/// `m_i ≤ i` so that `R_1 u_{m_1}, …, R_k u_{m_k}` are linearly independent.
///
/// `m_1 = 1`; at each later step the admissible vertex farthest from the
/// span of the vectors already chosen wins, ties going to the smallest index.
/// Returns the 1-based indices `m_i`.
pub fn select_independent_frames(rotations: &[Rotation], simplex: &SimplexConfig) -> Result<Vec<usize>> {
    let k = simplex.k;
    let d = simplex.d;
    if rotations.len() != k {
        return Err(Error::dim(format!("expected {k} rotations, got {}", rotations.len())));
    }
    if let Some(r) = rotations.iter().find(|r| r.dim() != d) {
        return Err(Error::dim(format!("rotation of dimension {} for simplex in R^{d}", r.dim())));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = Vec::with_capacity(k);
    for (i, rot) in rotations.iter().enumerate() {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for p in 0..=i {
            let v = rot.apply(&simplex.vertices[p]);
            let residual = residual_from_span(&basis, &v);
            let dist = norm(&residual);
            let better = match &best {
                None => true,
                Some((_, b, _)) => dist > b + FRAME_TIE_TOL,
            };
            if better {
                best = Some((p, dist, residual));
            }
        }
        let (p, dist, residual) = best.expect("at least one candidate");
        if dist <= FRAME_DEGENERACY_TOL {
            return Err(Error::Degenerate(format!(
                "every candidate at step {} lies within {FRAME_DEGENERACY_TOL:e} of the span",
                i + 1
            )));
        }
        basis.push(residual.iter().map(|c| c / dist).collect());
        chosen.push(p + 1);
    }
    Ok(chosen)
}

fn residual_from_span(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &r);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    r
}

/// Smallest singular value of the `d × k` matrix with columns `R_i u_{m_i}`.
pub fn frame_min_singular_value(rotations: &[Rotation], simplex: &SimplexConfig, indices: &[usize]) -> f64 {
    let d = simplex.d;
    let cols: Vec<f64> = rotations
        .iter()
        .zip(indices)
        .flat_map(|(r, &m)| r.apply(&simplex.vertices[m - 1]))
        .collect();
    let m = DMatrix::from_column_slice(d, indices.len(), &cols);
    m.singular_values().min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, tag};
    use approx::assert_abs_diff_eq;

    #[test]
    fn planar_triangle_vertices() {
        let s = regular_simplex_vertices(2, 2).unwrap();
        assert_abs_diff_eq!(s.vertices[0][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vertices[0][1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vertices[1][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vertices[1][1], 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn single_vertex_is_first_basis_vector() {
        let s = regular_simplex_vertices(5, 1).unwrap();
        assert_eq!(s.vertices, vec![vec![1.0, 0.0, 0.0, 0.0, 0.0]]);
    }

    #[test]
    fn gram_residual_small_for_all_orders() {
        for d in 1..=8 {
            for k in 1..=d {
                let s = regular_simplex_vertices(d, k).unwrap();
                assert!(s.gram_residual() < 1e-12, "d={d} k={k}");
                // embedded in the first k coordinates
                assert!(s.vertices.iter().all(|v| v[k..].iter().all(|&c| c == 0.0)));
            }
        }
    }

    #[test]
    fn simplex_order_errors() {
        assert!(matches!(regular_simplex_vertices(2, 3), Err(Error::Dimension(_))));
        assert!(matches!(regular_simplex_vertices(2, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = stream(11, tag::ROTATION, 0);
        for d in 1..=7 {
            for _ in 0..50 {
                let r = sample_rotation(d, &mut rng).unwrap();
                assert!(r.orthogonality_residual() < 1e-10);
                assert!((r.determinant().abs() - 1.0).abs() < 1e-8);
            }
        }
        assert!(sample_rotation(0, &mut rng).is_err());
    }

    #[test]
    fn special_group_has_positive_determinant() {
        let mut rng = stream(12, tag::ROTATION, 0);
        for d in 1..=5 {
            for _ in 0..50 {
                let r = sample_rotation_in(d, Group::Special, &mut rng).unwrap();
                assert!((r.determinant() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn one_dimensional_group_is_a_fair_sign() {
        let mut rng = stream(3, tag::ROTATION, 0);
        let plus = (0..10_000)
            .filter(|_| sample_rotation(1, &mut rng).unwrap().matrix()[(0, 0)] > 0.0)
            .count();
        let freq = plus as f64 / 1e4;
        assert!((0.47..=0.53).contains(&freq), "freq={freq}");
    }

    #[test]
    fn sphere_points_are_unit() {
        let mut rng = stream(5, tag::SPHERE, 0);
        for n in 1..=9 {
            let p = sample_sphere_point(n, &mut rng).unwrap();
            assert!((norm(&p.coords) - 1.0).abs() < 1e-12);
        }
        let p = sample_sphere_point(1, &mut rng).unwrap();
        assert_eq!(p.coords[0].abs(), 1.0);
        assert!(sample_sphere_point(0, &mut rng).is_err());
    }

    #[test]
    fn unit_simplex_tuple_membership() {
        let s = regular_simplex_vertices(2, 2).unwrap();
        assert!(is_unit_simplex_tuple(&[0.0, 0.0], &s.vertices, 1e-9).unwrap());
        let repeated = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(!is_unit_simplex_tuple(&[0.0, 0.0], &repeated, 1e-9).unwrap());
        assert!(is_unit_simplex_tuple(&[0.0], &[vec![1.0, 0.0]], 1e-9).is_err());

        let mut rng = stream(9, tag::ROTATION, 0);
        let s3 = regular_simplex_vertices(4, 3).unwrap();
        for _ in 0..20 {
            let r = sample_rotation(4, &mut rng).unwrap();
            let v: Vec<Vec<f64>> = s3.vertices.iter().map(|u| r.apply(u)).collect();
            assert!(is_unit_simplex_tuple(&[0.0; 4], &v, 1e-9).unwrap());
        }
    }

    #[test]
    fn frame_selection_examples() {
        let s1 = regular_simplex_vertices(3, 1).unwrap();
        let mut rng = stream(1, tag::ROTATION, 0);
        let r = sample_rotation(3, &mut rng).unwrap();
        assert_eq!(select_independent_frames(&[r], &s1).unwrap(), vec![1]);

        let s2 = regular_simplex_vertices(2, 2).unwrap();
        let id2 = vec![Rotation::identity(2); 2];
        assert_eq!(select_independent_frames(&id2, &s2).unwrap(), vec![1, 2]);

        let s3 = regular_simplex_vertices(3, 3).unwrap();
        let id3 = vec![Rotation::identity(3); 3];
        assert_eq!(select_independent_frames(&id3, &s3).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn frame_selection_prefers_new_direction() {
        // R_2 maps u_1 onto a direction orthogonal to R_1 u_1 = e_1: both
        // candidates are admissible, the farther one (p = 1) must win.
        let s2 = regular_simplex_vertices(2, 2).unwrap();
        let quarter = Rotation::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        let picks = select_independent_frames(&[Rotation::identity(2), quarter], &s2).unwrap();
        assert_eq!(picks, vec![1, 1]);
    }

    #[test]
    fn frame_selection_rejects_wrong_counts() {
        let s2 = regular_simplex_vertices(2, 2).unwrap();
        assert!(select_independent_frames(&[Rotation::identity(2)], &s2).is_err());
        assert!(select_independent_frames(&[Rotation::identity(3), Rotation::identity(3)], &s2).is_err());
    }
}
