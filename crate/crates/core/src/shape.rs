//! Analytic indicator sets with exact membership and Lebesgue measure.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::norm;
use crate::rng::{stream, tag};
use crate::stats::Moments;

/// An axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).max(0.0)).product()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| b < a)
    }

    pub fn intersect(&self, other: &Bounds) -> Bounds {
        Bounds {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect(),
        }
    }

    pub fn hull(&self, other: &Bounds) -> Bounds {
        Bounds {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn contains_bounds(&self, inner: &Bounds, tol: f64) -> bool {
        self.lo.iter().zip(&inner.lo).all(|(a, b)| *b >= a - tol)
            && self.hi.iter().zip(&inner.hi).all(|(a, b)| *b <= a + tol)
    }

    /// Euclidean distance from `x` to the box (zero inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&c, (&a, &b))| {
                let g = (a - c).max(c - b).max(0.0);
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance from `x` to a point of the box.
    pub fn max_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&c, (&a, &b))| {
                let g = (c - a).abs().max((b - c).abs());
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn dilate(&self, r: f64) -> Bounds {
        Bounds {
            lo: self.lo.iter().map(|v| v - r).collect(),
            hi: self.hi.iter().map(|v| v + r).collect(),
        }
    }
}

/// A measurable set described analytically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSet {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `|n·(y−c)| ≤ thickness/2` with lateral part `|(y−c)_⊥| ≤ extent/2`.
    Slab {
        center: Vec<f64>,
        normal: Vec<f64>,
        thickness: f64,
        extent: f64,
    },
    /// Half-open cube `[corner, corner + side)`.
    Cube {
        corner: Vec<f64>,
        side: f64,
    },
    Union {
        members: Vec<ShapeSet>,
    },
    Intersection {
        members: Vec<ShapeSet>,
    },
    Difference {
        base: Box<ShapeSet>,
        removed: Box<ShapeSet>,
    },
}

/// Relative standard error targeted by Monte Carlo measures of overlapping
/// combinations.
pub const MC_MEASURE_REL_ERROR: f64 = 1e-3;
const MC_MEASURE_BATCH: usize = 1 << 15;
const MC_MEASURE_MAX_BATCHES: usize = 2048;

fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma(half + 1.0)
}

impl ShapeSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        ShapeSet::Ball { center, radius }
    }

    pub fn annulus(center: Vec<f64>, inner: f64, outer: f64) -> Self {
        ShapeSet::Annulus { center, inner, outer }
    }

    pub fn cube(corner: Vec<f64>, side: f64) -> Self {
        ShapeSet::Cube { corner, side }
    }

    pub fn slab(center: Vec<f64>, normal: Vec<f64>, thickness: f64, extent: f64) -> Self {
        let n = norm(&normal);
        ShapeSet::Slab {
            center,
            normal: normal.iter().map(|c| c / n).collect(),
            thickness,
            extent,
        }
    }

    /// Slab whose normal is the coordinate axis `axis`.
    pub fn axis_slab(center: Vec<f64>, axis: usize, thickness: f64, extent: f64) -> Self {
        let mut normal = vec![0.0; center.len()];
        normal[axis] = 1.0;
        Self::slab(center, normal, thickness, extent)
    }

    pub fn empty() -> Self {
        ShapeSet::Union { members: Vec::new() }
    }

    /// Knapp cap: the `delta`-thick shell around the unit sphere centered at
    /// `center`, cut by a slab of lateral width `√delta` around `direction`.
    pub fn knapp_cap(center: &[f64], direction: &[f64], delta: f64) -> Self {
        let n = norm(direction);
        let u: Vec<f64> = direction.iter().map(|c| c / n).collect();
        let tip: Vec<f64> = center.iter().zip(&u).map(|(c, v)| c + v).collect();
        ShapeSet::Intersection {
            members: vec![
                ShapeSet::annulus(center.to_vec(), 1.0 - delta / 2.0, 1.0 + delta / 2.0),
                ShapeSet::slab(tip, u, 4.0 * delta, delta.sqrt()),
            ],
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ShapeSet::Ball { center, .. }
            | ShapeSet::Annulus { center, .. }
            | ShapeSet::Slab { center, .. } => Some(center.len()),
            ShapeSet::Cube { corner, .. } => Some(corner.len()),
            ShapeSet::Union { members } | ShapeSet::Intersection { members } => {
                members.iter().find_map(ShapeSet::dim)
            }
            ShapeSet::Difference { base, .. } => base.dim(),
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ShapeSet::Ball { center, radius } => dist2(x, center) <= radius * radius,
            ShapeSet::Annulus { center, inner, outer } => {
                let r2 = dist2(x, center);
                r2 >= inner * inner && r2 <= outer * outer
            }
            ShapeSet::Slab {
                center,
                normal,
                thickness,
                extent,
            } => {
                let mut along = 0.0;
                let mut total = 0.0;
                for ((xi, ci), ni) in x.iter().zip(center).zip(normal) {
                    let v = xi - ci;
                    along += v * ni;
                    total += v * v;
                }
                let half_e = extent / 2.0;
                along.abs() <= thickness / 2.0 && total - along * along <= half_e * half_e
            }
            ShapeSet::Cube { corner, side } => x.iter().zip(corner).all(|(xi, c)| *xi >= *c && *xi < c + side),
            ShapeSet::Union { members } => members.iter().any(|m| m.contains(x)),
            ShapeSet::Intersection { members } => !members.is_empty() && members.iter().all(|m| m.contains(x)),
            ShapeSet::Difference { base, removed } => base.contains(x) && !removed.contains(x),
        }
    }

    /// Axis-aligned bounding box, `None` for sets known to be empty.
    pub fn bounds(&self) -> Option<Bounds> {
        match self {
            ShapeSet::Ball { center, radius } => Some(around(center, *radius)),
            ShapeSet::Annulus { center, outer, .. } => Some(around(center, *outer)),
            ShapeSet::Slab {
                center,
                normal,
                thickness,
                extent,
            } => {
                let half: Vec<f64> = normal
                    .iter()
                    .map(|n| thickness / 2.0 * n.abs() + extent / 2.0 * (1.0 - n * n).max(0.0).sqrt())
                    .collect();
                Some(Bounds {
                    lo: center.iter().zip(&half).map(|(c, h)| c - h).collect(),
                    hi: center.iter().zip(&half).map(|(c, h)| c + h).collect(),
                })
            }
            ShapeSet::Cube { corner, side } => Some(Bounds {
                lo: corner.clone(),
                hi: corner.iter().map(|c| c + side).collect(),
            }),
            ShapeSet::Union { members } => members.iter().filter_map(ShapeSet::bounds).reduce(|a, b| a.hull(&b)),
            ShapeSet::Intersection { members } => {
                let mut it = members.iter().map(ShapeSet::bounds);
                let mut acc = it.next()??;
                for b in it {
                    acc = acc.intersect(&b?);
                }
                (!acc.is_empty()).then_some(acc)
            }
            ShapeSet::Difference { base, .. } => base.bounds(),
        }
    }

    /// Lebesgue measure. Primitives and unions of members with disjoint
    /// bounding boxes are exact; other combinations fall back to a seeded
    /// Monte Carlo estimate with relative standard error at most 0.1%.
    pub fn measure(&self) -> f64 {
        self.measure_with_error().0
    }

    /// Measure together with its standard error (zero when exact).
    pub fn measure_with_error(&self) -> (f64, f64) {
        if let Some(m) = self.exact_measure() {
            return (m, 0.0);
        }
        self.mc_measure()
    }

    fn exact_measure(&self) -> Option<f64> {
        match self {
            ShapeSet::Ball { center, radius } => Some(unit_ball_volume(center.len()) * radius.powi(center.len() as i32)),
            ShapeSet::Annulus { center, inner, outer } => {
                let d = center.len() as i32;
                Some(unit_ball_volume(center.len()) * (outer.powi(d) - inner.min(*outer).powi(d)))
            }
            ShapeSet::Slab {
                center,
                thickness,
                extent,
                ..
            } => {
                let d = center.len();
                Some(thickness * unit_ball_volume(d - 1) * (extent / 2.0).powi(d as i32 - 1))
            }
            ShapeSet::Cube { corner, side } => Some(side.powi(corner.len() as i32)),
            ShapeSet::Union { members } => {
                let boxes: Vec<Option<Bounds>> = members.iter().map(ShapeSet::bounds).collect();
                for i in 0..boxes.len() {
                    for j in i + 1..boxes.len() {
                        if let (Some(a), Some(b)) = (&boxes[i], &boxes[j]) {
                            if !a.intersect(b).is_empty() {
                                return None;
                            }
                        }
                    }
                }
                members.iter().map(ShapeSet::exact_measure).sum()
            }
            ShapeSet::Difference { base, removed } => match (base.bounds(), removed.bounds()) {
                (Some(a), Some(b)) if a.intersect(&b).is_empty() => base.exact_measure(),
                (_, None) => base.exact_measure(),
                (None, _) => Some(0.0),
                _ => None,
            },
            ShapeSet::Intersection { .. } => self.bounds().is_none().then_some(0.0),
        }
    }

    fn mc_measure(&self) -> (f64, f64) {
        let Some(b) = self.bounds() else {
            return (0.0, 0.0);
        };
        let vol = b.volume();
        let d = b.dim();
        let mut acc = Moments::new();
        let mut done = 0;
        while done < MC_MEASURE_MAX_BATCHES {
            let round = 16.min(MC_MEASURE_MAX_BATCHES - done);
            let hits = Execution::Parallel.map(round, |i| {
                let mut rng = stream(0x5eed, tag::MEASURE, (done + i) as u64);
                let mut x = vec![0.0; d];
                let mut count = 0u64;
                for _ in 0..MC_MEASURE_BATCH {
                    for (j, c) in x.iter_mut().enumerate() {
                        *c = b.lo[j] + (b.hi[j] - b.lo[j]) * rng.random::<f64>();
                    }
                    count += self.contains(&x) as u64;
                }
                count
            });
            for h in hits {
                acc.push(h as f64 / MC_MEASURE_BATCH as f64);
            }
            done += round;
            let mean = acc.mean();
            if mean > 0.0 && acc.stderr() / mean <= MC_MEASURE_REL_ERROR {
                break;
            }
            if mean == 0.0 && done >= 64 {
                break;
            }
        }
        (acc.mean() * vol, acc.stderr() * vol)
    }

    /// The same set shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> ShapeSet {
        let shift = |c: &Vec<f64>| c.iter().zip(v).map(|(a, b)| a + b).collect::<Vec<f64>>();
        match self {
            ShapeSet::Ball { center, radius } => ShapeSet::Ball {
                center: shift(center),
                radius: *radius,
            },
            ShapeSet::Annulus { center, inner, outer } => ShapeSet::Annulus {
                center: shift(center),
                inner: *inner,
                outer: *outer,
            },
            ShapeSet::Slab {
                center,
                normal,
                thickness,
                extent,
            } => ShapeSet::Slab {
                center: shift(center),
                normal: normal.clone(),
                thickness: *thickness,
                extent: *extent,
            },
            ShapeSet::Cube { corner, side } => ShapeSet::Cube {
                corner: shift(corner),
                side: *side,
            },
            ShapeSet::Union { members } => ShapeSet::Union {
                members: members.iter().map(|m| m.translated(v)).collect(),
            },
            ShapeSet::Intersection { members } => ShapeSet::Intersection {
                members: members.iter().map(|m| m.translated(v)).collect(),
            },
            ShapeSet::Difference { base, removed } => ShapeSet::Difference {
                base: Box::new(base.translated(v)),
                removed: Box::new(removed.translated(v)),
            },
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(sd) if sd != d => Err(Error::dim(format!("shape in R^{sd} used in R^{d}"))),
            _ => Ok(()),
        }
    }
}

fn around(center: &[f64], r: f64) -> Bounds {
    Bounds {
        lo: center.iter().map(|c| c - r).collect(),
        hi: center.iter().map(|c| c + r).collect(),
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn primitive_measures() {
        assert_relative_eq!(ShapeSet::ball(vec![0.0, 0.0], 2.0).measure(), 4.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(ShapeSet::ball(vec![0.0; 3], 1.0).measure(), 4.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            ShapeSet::annulus(vec![0.0, 0.0], 1.0, 2.0).measure(),
            3.0 * PI,
            epsilon = 1e-12
        );
        assert_relative_eq!(ShapeSet::cube(vec![0.0; 3], 2.0).measure(), 8.0, epsilon = 1e-12);
        assert_relative_eq!(
            ShapeSet::axis_slab(vec![0.0, 0.0], 1, 0.1, 2.0).measure(),
            0.2,
            epsilon = 1e-12
        );
        // d = 3 slab is a disk-shaped cylinder
        assert_relative_eq!(
            ShapeSet::axis_slab(vec![0.0; 3], 2, 0.1, 2.0).measure(),
            0.1 * PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn disjoint_union_is_exact_and_overlap_uses_mc() {
        let a = ShapeSet::ball(vec![0.0, 0.0], 1.0);
        let b = ShapeSet::ball(vec![3.0, 0.0], 1.0);
        let u = ShapeSet::Union {
            members: vec![a.clone(), b],
        };
        assert_eq!(u.measure_with_error(), (2.0 * PI, 0.0));

        let c = ShapeSet::ball(vec![1.0, 0.0], 1.0);
        let overlap = ShapeSet::Union { members: vec![a, c] };
        // two unit disks at distance 1: 2π − (2π/3 − √3/2)
        let exact = 2.0 * PI - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0);
        let (m, se) = overlap.measure_with_error();
        assert!(se > 0.0 && se / m <= MC_MEASURE_REL_ERROR * 1.01);
        assert!((m - exact).abs() < 4.0 * se, "m={m} exact={exact} se={se}");
    }

    #[test]
    fn slab_membership_and_bounds() {
        let s = ShapeSet::slab(vec![0.0, 0.0], vec![1.0, 1.0], 0.2, 1.0);
        assert!(s.contains(&[0.05, 0.05]));
        assert!(!s.contains(&[0.2, 0.2]));
        assert!(s.contains(&[0.3, -0.3]));
        assert!(!s.contains(&[0.4, -0.4]));
        let b = s.bounds().unwrap();
        let h = 0.1 / 2f64.sqrt() + 0.5 / 2f64.sqrt();
        assert_relative_eq!(b.hi[0], h, epsilon = 1e-12);
    }

    #[test]
    fn knapp_cap_measure() {
        // shell ∩ strip |y| ≤ √δ/2, x > 0 : ∫ (√(ro²−y²) − √(ri²−y²)) dy
        let delta: f64 = 0.04;
        let cap = ShapeSet::knapp_cap(&[0.0, 0.0], &[1.0, 0.0], delta);
        let (ri, ro, w) = (1.0 - delta / 2.0, 1.0 + delta / 2.0, delta.sqrt() / 2.0);
        let n = 200_000;
        let exact: f64 = (0..n)
            .map(|i| {
                let y = -w + (i as f64 + 0.5) * 2.0 * w / n as f64;
                ((ro * ro - y * y).sqrt() - (ri * ri - y * y).sqrt()) * 2.0 * w / n as f64
            })
            .sum();
        let (m, se) = cap.measure_with_error();
        assert!((m - exact).abs() < 4.0 * se, "m={m} exact={exact} se={se}");
        assert!(cap.contains(&[1.0, 0.0]));
        assert!(!cap.contains(&[-1.0, 0.0]));
    }

    #[test]
    fn empty_sets() {
        assert_eq!(ShapeSet::empty().measure(), 0.0);
        assert!(ShapeSet::empty().bounds().is_none());
        let disjoint = ShapeSet::Intersection {
            members: vec![ShapeSet::ball(vec![0.0], 1.0), ShapeSet::ball(vec![5.0], 1.0)],
        };
        assert_eq!(disjoint.measure(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let cap = ShapeSet::knapp_cap(&[0.0, 0.0], &[0.0, 1.0], 0.1);
        let s = serde_json::to_string(&cap).unwrap();
        assert!(s.contains("\"kind\":\"intersection\""));
        let back: ShapeSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cap);
    }

    #[test]
    fn translation_preserves_measure_and_membership() {
        let cap = ShapeSet::knapp_cap(&[0.0, 0.0], &[0.0, 1.0], 0.1);
        let v = [0.3, -2.0];
        let moved = cap.translated(&v);
        assert!(moved.contains(&[0.3, -1.0]));
        assert_relative_eq!(moved.measure(), cap.measure(), max_relative = 5e-3);
    }
}
