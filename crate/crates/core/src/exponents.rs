//! Exact exponents and exponent tuples.
//!
//! Exponents are kept as rationals (or infinity) so that Hölder relations and
//! region membership are decided without rounding.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// An integrability exponent in `(0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Q),
    Infinite,
}

impl Exponent {
    pub fn finite(value: Q) -> Result<Self> {
        if value <= Q::zero() {
            return Err(Error::Exponent(format!("exponent must be positive, got {value}")));
        }
        Ok(Exponent::Finite(value))
    }

    pub fn int(n: i64) -> Self {
        Exponent::Finite(Q::from_integer(n))
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> Q {
        match self {
            Exponent::Finite(p) => p.recip(),
            Exponent::Infinite => Q::zero(),
        }
    }

    pub fn reciprocal_f64(&self) -> f64 {
        self.reciprocal().to_f64().unwrap_or(f64::NAN)
    }

    /// Builds the exponent whose reciprocal is `inv`; `0` maps to infinity.
    pub fn from_reciprocal(inv: Q) -> Result<Self> {
        if inv.is_zero() {
            Ok(Exponent::Infinite)
        } else {
            Exponent::finite(inv.recip())
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => p.to_f64().unwrap_or(f64::NAN),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// Parses a rational such as `2/3`, `5`, or `-1/2`. Decimal notation is
/// rejected so that exponents never pass through floating point.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = num.parse().map_err(|_| bad())?;
    let d: i64 = den.parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => Exponent::finite(parse_rational(other)?),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `(p_1, …, p_k; r)`: a bound `L^{p_1} × … × L^{p_k} → L^r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentTuple {
    pub p: Vec<Exponent>,
    pub r: Exponent,
    /// Whether the tuple is asserted to lie on the Hölder line.
    #[serde(default)]
    pub declared_holder: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ExponentTuple {
    pub fn new(p: Vec<Exponent>, r: Exponent) -> Self {
        Self {
            p,
            r,
            declared_holder: false,
            label: None,
        }
    }

    /// Tuple whose Hölder relation is part of its definition.
    pub fn holder(p: Vec<Exponent>, r: Exponent) -> Self {
        Self {
            declared_holder: true,
            ..Self::new(p, r)
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn arity(&self) -> usize {
        self.p.len()
    }

    /// `Σ 1/p_i`.
    pub fn reciprocal_sum(&self) -> Q {
        self.p.iter().map(Exponent::reciprocal).fold(Q::zero(), |a, b| a + b)
    }

    /// Parses `p_1,…,p_k,r` (the last entry is the target exponent).
    pub fn parse_list(s: &str) -> Result<Self> {
        let parts: Vec<Exponent> = s
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if parts.len() < 2 {
            return Err(Error::Parse(format!(
                "expected at least one input exponent and a target exponent in {s:?}"
            )));
        }
        let (r, p) = parts.split_last().expect("nonempty");
        Ok(Self::new(p.to_vec(), *r))
    }

    /// Same exponents with the inputs permuted by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            p: perm.iter().map(|&i| self.p[i]).collect(),
            ..self.clone()
        }
    }
}

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.p.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "; {})", self.r)
    }
}

/// True iff `Σ 1/p_i = 1/r` exactly.
pub fn holder_consistent(e: &ExponentTuple) -> bool {
    e.reciprocal_sum() == e.r.reciprocal()
}
