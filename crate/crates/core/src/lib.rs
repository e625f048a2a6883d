//! Averaging operators over spheres, triangles and regular k-simplices.
//!
//! The crate evaluates the spherical average `S^1`, the k-simplex average
//! `S^k` (with `T = S^2`), and the bilinear spherical average `B` on
//! discretized nonnegative functions by Monte Carlo over the orthogonal group
//! or the unit sphere, and provides the tooling used to probe their
//! `L^p`-improving and restricted strong-type bounds numerically: exact
//! exponent arithmetic, indicator set families, a ratio harness, and a
//! lower-bound operator norm estimator.
//!
//! Every random draw comes from a counter-based stream keyed by
//! `(seed, purpose, index)`, so results do not depend on how work is split
//! across threads. The `parallel` feature (on by default) runs the per-point
//! loops on rayon; without it the same loops run sequentially.

pub mod error;
pub mod exec;
pub mod exponents;
pub mod extremizer;
pub mod geometry;
pub mod gridfn;
pub mod inequalities;
pub mod operators;
pub mod rng;
pub mod shape;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
pub use exponents::{Exponent, ExponentTuple, Q};
pub use geometry::{Group, Rotation, SimplexConfig, SpherePoint};
pub use gridfn::{Grid, GridFunction};
pub use operators::{McEstimate, OperatorKind};
pub use shape::ShapeSet;
