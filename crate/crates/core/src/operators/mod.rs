//! Monte Carlo evaluation of the averaging operators and the identities and
//! bounds built on them.
//!
//! All operators share one kernel: a [`Placement`] draws the displacement
//! vectors `w_1, …, w_k` of one random configuration (the rotated simplex
//! vertices `R u_i`, a unit vector, or a point of `S^{2d-1}` split in two
//! halves), and the operator value at `x` is the mean of `Π f_i(x − w_i)`.
//! Every output point has its own stream keyed by `(seed, tag, point)`, so
//! two evaluations that share a seed see identical configurations at every
//! point (common random numbers).

pub(crate) mod averages;
mod duality;
mod localization;
mod majorize;
mod pushforward;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use averages::{
    apply_operator, bilinear_spherical_average, evaluate_at, simplex_average, spherical_average, OperatorOutput,
};
pub use duality::{adjoint_residual, l1_pairing, AdjointResidual};
pub use localization::{cube_decomposition_bound, cube_norms, support_radius_check, L1_LATTICE_CONSTANT};
pub use majorize::{majorization_check, majorization_exponents, majorization_rhs, MajorizationSample};
pub use pushforward::{
    empirical_difference_histogram, pushforward_density, HistogramFit, PushforwardDensity, RadialHistogram, DIFFERENCE_SUPPORT,
    NOMINAL_SUPPORT,
};


use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Group;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n_samples: 0,
            seed,
        }
    }
}

/// Which averaging operator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum OperatorKind {
    /// `S^1`, the spherical average.
    Spherical,
    /// `S^k`; `k = 2` is the triangle operator `T`.
    Simplex { k: usize },
    /// `B`, the bilinear spherical average over `S^{2d-1}`.
    Bilinear,
}

impl OperatorKind {
    pub const TRIANGLE: OperatorKind = OperatorKind::Simplex { k: 2 };

    pub fn arity(&self) -> usize {
        match self {
            OperatorKind::Spherical => 1,
            OperatorKind::Simplex { k } => *k,
            OperatorKind::Bilinear => 2,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Spherical => f.write_str("S1"),
            OperatorKind::Simplex { k: 2 } => f.write_str("T"),
            OperatorKind::Simplex { k } => write!(f, "S{k}"),
            OperatorKind::Bilinear => f.write_str("B"),
        }
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    /// Accepts `S1`, `T`, `B`, and `S<k>` / `Sk:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "S1" | "S" | "spherical" => return Ok(OperatorKind::Spherical),
            "T" | "triangle" => return Ok(OperatorKind::TRIANGLE),
            "B" | "bilinear" => return Ok(OperatorKind::Bilinear),
            _ => {}
        }
        let digits = t.strip_prefix("Sk:").or_else(|| t.strip_prefix('S'));
        match digits.and_then(|v| v.parse::<usize>().ok()) {
            Some(1) => Ok(OperatorKind::Spherical),
            Some(k) if k >= 2 => Ok(OperatorKind::Simplex { k }),
            _ => Err(Error::Parse(format!("unknown operator {s:?}"))),
        }
    }
}

/// Sampling parameters shared by all Monte Carlo operator evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Random configurations per output point.
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub group: Group,
    #[serde(default)]
    pub execution: Execution,
}

/// Rotations per output point used when nothing else is configured.
pub const DEFAULT_ROTATIONS_PER_POINT: usize = 4096;

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            group: Group::default(),
            execution: Execution::default(),
        }
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = group;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self::new(DEFAULT_ROTATIONS_PER_POINT, 0)
    }
}
