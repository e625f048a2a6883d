use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, regular_simplex_vertices};
use crate::shape::ShapeSet;

/// Indicator set configurations used to probe restricted-type bounds.
/// Sets are placed around the vertices `u_1, …, u_k` of the regular
/// simplex so that a single simplex placement can meet all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Balls of radius δ centered at `u_i − ū`; for `k = 2` two balls at
    /// distance 1.
    #[serde(alias = "balls")]
    TwinBalls,
    /// Every set is the shell `1 − δ/2 ≤ |y| ≤ 1 + δ/2`.
    Annuli,
    /// Slabs of thickness δ and lateral extent 2 through `u_i − ū`, normal
    /// to that direction; for `k = 2` two parallel slabs at distance 1.
    Slabs,
    /// Knapp caps of the unit shell in the directions `u_i`.
    KnappCaps,
    /// The four kinds above in rotation over one δ grid.
    Mixed,
}

impl FamilyKind {
    pub const PURE: [FamilyKind; 4] = [
        FamilyKind::TwinBalls,
        FamilyKind::Annuli,
        FamilyKind::Slabs,
        FamilyKind::KnappCaps,
    ];

    fn name(&self) -> &'static str {
        match self {
            FamilyKind::TwinBalls => "twin-balls",
            FamilyKind::Annuli => "annuli",
            FamilyKind::Slabs => "slabs",
            FamilyKind::KnappCaps => "knapp-caps",
            FamilyKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "twin-balls" | "balls" => Ok(FamilyKind::TwinBalls),
            "annuli" | "annulus" => Ok(FamilyKind::Annuli),
            "slabs" | "slab" => Ok(FamilyKind::Slabs),
            "knapp-caps" | "caps" => Ok(FamilyKind::KnappCaps),
            "mixed" => Ok(FamilyKind::Mixed),
            other => Err(Error::Parse(format!("unknown set family {other:?}"))),
        }
    }
}

/// A family of `k`-tuples of sets in `R^d` indexed by log-spaced scales
/// `δ_1 > … > δ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetFamily {
    pub kind: FamilyKind,
    pub d: usize,
    pub k: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub members: usize,
}

/// One member of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub index: usize,
    pub kind: FamilyKind,
    pub delta: f64,
    pub sets: Vec<ShapeSet>,
}

impl SetFamily {
    pub fn new(kind: FamilyKind, d: usize, k: usize, delta_min: f64, delta_max: f64, members: usize) -> Result<Self> {
        if k < 1 || k > d {
            return Err(Error::dim(format!("cannot place {k} sets in R^{d}")));
        }
        if !(delta_min > 0.0 && delta_min <= delta_max && delta_max <= 1.0) {
            return Err(Error::arg(format!(
                "scales must satisfy 0 < δ_min <= δ_max <= 1, got [{delta_min}, {delta_max}]"
            )));
        }
        if members < 1 {
            return Err(Error::arg("a family needs at least one member"));
        }
        Ok(Self {
            kind,
            d,
            k,
            delta_min,
            delta_max,
            members,
        })
    }

    /// Scales from `delta_max` down to `delta_min`, evenly spaced in `log δ`.
    pub fn deltas(&self) -> Vec<f64> {
        let n = self.members;
        if n == 1 {
            return vec![self.delta_max];
        }
        let (a, b) = (self.delta_max.ln(), self.delta_min.ln());
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.delta_min
                } else {
                    (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }

    pub fn kind_of(&self, index: usize) -> FamilyKind {
        match self.kind {
            FamilyKind::Mixed => FamilyKind::PURE[index % FamilyKind::PURE.len()],
            k => k,
        }
    }

    fn anchors(&self) -> Result<Vec<Vec<f64>>> {
        Ok(regular_simplex_vertices(self.d, self.k)?.vertices)
    }

    pub fn member(&self, index: usize) -> Result<FamilyMember> {
        let delta = *self
            .deltas()
            .get(index)
            .ok_or_else(|| Error::arg(format!("family has no member {index}")))?;
        let kind = self.kind_of(index);
        Ok(FamilyMember {
            index,
            kind,
            delta,
            sets: self.sets(kind, delta)?,
        })
    }

    pub fn all_members(&self) -> Result<Vec<FamilyMember>> {
        (0..self.members).map(|i| self.member(i)).collect()
    }

    /// The sets of one pure kind at scale `delta`.
    pub fn sets(&self, kind: FamilyKind, delta: f64) -> Result<Vec<ShapeSet>> {
        let d = self.d;
        let anchors = self.anchors()?;
        let k = anchors.len();
        let mut centroid = vec![0.0; d];
        for u in &anchors {
            centroid.iter_mut().zip(u).for_each(|(c, v)| *c += v / k as f64);
        }
        let offsets: Vec<Vec<f64>> = anchors
            .iter()
            .map(|u| u.iter().zip(&centroid).map(|(a, b)| a - b).collect())
            .collect();
        let origin = vec![0.0; d];
        Ok(match kind {
            FamilyKind::TwinBalls => offsets.iter().map(|c| ShapeSet::ball(c.clone(), delta)).collect(),
            FamilyKind::Annuli => vec![ShapeSet::annulus(origin, 1.0 - delta / 2.0, 1.0 + delta / 2.0); k],
            FamilyKind::Slabs => offsets
                .iter()
                .map(|c| {
                    let n = norm(c);
                    let normal = if n > 0.0 {
                        c.iter().map(|v| v / n).collect()
                    } else {
                        let mut e = vec![0.0; d];
                        e[0] = 1.0;
                        e
                    };
                    ShapeSet::slab(c.clone(), normal, delta, 2.0)
                })
                .collect(),
            FamilyKind::KnappCaps => anchors.iter().map(|u| ShapeSet::knapp_cap(&origin, u, delta)).collect(),
            FamilyKind::Mixed => return Err(Error::arg("mixed is not a pure family kind")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas_are_log_spaced_and_descending() {
        let f = SetFamily::new(FamilyKind::Mixed, 2, 2, 0.02, 1.0, 30).unwrap();
        let ds = f.deltas();
        assert_eq!(ds.len(), 30);
        assert_eq!(ds[0], 1.0);
        assert_eq!(ds[29], 0.02);
        let ratio = ds[1] / ds[0];
        for w in ds.windows(2) {
            assert!(w[1] < w[0]);
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        let kinds: Vec<_> = (0..8).map(|i| f.kind_of(i)).collect();
        assert_eq!(&kinds[..4], &FamilyKind::PURE);
        assert_eq!(&kinds[4..], &FamilyKind::PURE);
    }

    #[test]
    fn twin_balls_are_one_apart() {
        let f = SetFamily::new(FamilyKind::TwinBalls, 2, 2, 0.02, 0.2, 5).unwrap();
        let m = f.member(2).unwrap();
        let centers: Vec<Vec<f64>> = m
            .sets
            .iter()
            .map(|s| match s {
                ShapeSet::Ball { center, radius } => {
                    assert_eq!(*radius, m.delta);
                    center.clone()
                }
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        let dist = norm(&[centers[0][0] - centers[1][0], centers[0][1] - centers[1][1]]);
        assert!((dist - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slabs_are_parallel_and_one_apart() {
        let f = SetFamily::new(FamilyKind::Slabs, 2, 2, 0.1, 0.1, 1).unwrap();
        let sets = f.member(0).unwrap().sets;
        let (ShapeSet::Slab { center: c0, normal: n0, .. }, ShapeSet::Slab { center: c1, normal: n1, .. }) =
            (&sets[0], &sets[1])
        else {
            panic!("expected slabs");
        };
        assert!((n0[0] + n1[0]).abs() < 1e-12 && (n0[1] + n1[1]).abs() < 1e-12);
        let gap = (c0[0] - c1[0]) * n0[0] + (c0[1] - c1[1]) * n0[1];
        assert!((gap.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn caps_sit_on_the_unit_circle() {
        let f = SetFamily::new(FamilyKind::KnappCaps, 2, 2, 0.05, 0.05, 1).unwrap();
        let sets = f.member(0).unwrap().sets;
        assert!(sets[0].contains(&[1.0, 0.0]));
        assert!(sets[1].contains(&[0.5, 3f64.sqrt() / 2.0]));
        assert!(!sets[0].contains(&[0.5, 3f64.sqrt() / 2.0]));
        for s in &sets {
            assert!(s.measure() > 0.0);
        }
    }

    #[test]
    fn names_round_trip() {
        for k in FamilyKind::PURE.iter().chain([FamilyKind::Mixed].iter()) {
            assert_eq!(k.to_string().parse::<FamilyKind>().unwrap(), *k);
            let j = serde_json::to_string(k).unwrap();
            assert_eq!(serde_json::from_str::<FamilyKind>(&j).unwrap(), *k);
        }
        assert_eq!("balls".parse::<FamilyKind>().unwrap(), FamilyKind::TwinBalls);
        assert!(SetFamily::new(FamilyKind::Annuli, 2, 2, 0.5, 0.1, 3).is_err());
    }
}
