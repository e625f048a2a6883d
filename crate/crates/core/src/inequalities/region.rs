use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{q, Q};

/// A point `(1/p, 1/q)` of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPoint2 {
    #[serde(with = "rational_string")]
    pub x: Q,
    #[serde(with = "rational_string")]
    pub y: Q,
}

impl ExponentPoint2 {
    pub fn new(x: Q, y: Q) -> Result<Self> {
        let unit = |v: &Q| *v >= Q::zero() && *v <= Q::one();
        if !unit(&x) || !unit(&y) {
            return Err(Error::Exponent(format!("({x}, {y}) is outside the unit square")));
        }
        Ok(Self { x, y })
    }

    pub fn swapped(&self) -> Self {
        Self { x: self.y, y: self.x }
    }

    /// Parses `"a/b,c/d"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("expected two coordinates in {s:?}")));
        }
        Self::new(
            crate::exponents::parse_rational(parts[0])?,
            crate::exponents::parse_rational(parts[1])?,
        )
    }
}

impl fmt::Display for ExponentPoint2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

mod rational_string {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        crate::exponents::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Vertices `(0,1)`, `(1,0)`, `(d/(d+1), d/(d+1))` of the `L^p × L^q → L^1`
/// region of the triangle operator, counter-clockwise.
pub fn t_l1_region_vertices(d: usize) -> [ExponentPoint2; 3] {
    let v = q(d as i64, d as i64 + 1);
    [
        ExponentPoint2 { x: Q::one(), y: Q::zero() },
        ExponentPoint2 { x: v, y: v },
        ExponentPoint2 { x: Q::zero(), y: Q::one() },
    ]
}

fn orientation(a: &ExponentPoint2, b: &ExponentPoint2, c: &ExponentPoint2) -> Q {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Exact membership of `pt` in the closed triangle spanned by the region
/// vertices.
pub fn t_l1_region_contains(d: usize, pt: &ExponentPoint2) -> bool {
    let v = t_l1_region_vertices(d);
    let o = [
        orientation(&v[0], &v[1], pt),
        orientation(&v[1], &v[2], pt),
        orientation(&v[2], &v[0], pt),
    ];
    let neg = o.iter().any(|s| s.is_negative());
    let pos = o.iter().any(|s| s.is_positive());
    !(neg && pos)
}

/// Closed polygon (first vertex repeated) tracing the region boundary.
pub fn t_l1_region_polygon(d: usize) -> Vec<ExponentPoint2> {
    let v = t_l1_region_vertices(d);
    let mut out = v.to_vec();
    out.push(v[0]);
    out
}
