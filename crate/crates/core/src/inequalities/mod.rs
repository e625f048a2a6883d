//! Exponent geometry and the restricted strong-type ratio harness.
//!
//! Exponents and region membership use exact rationals; only the measured
//! ratios are floating point.

mod calculators;
mod families;
mod harness;
mod region;

pub use calculators::{
    clm_diagonal_r, clm_exponents, improving_triples_t, lower_dim_exponents, triple_to_tuple,
};
pub use families::{FamilyKind, FamilyMember, SetFamily};
pub use harness::{
    indicator, output_norm, ratio_from_output, restricted_ratio, verify_uniform_boundedness, Expectation, FamilyEvaluation,
    Harness, RatioPoint, VerificationReport, MAX_RELATIVE_STDERR,
};
pub use region::{t_l1_region_contains, t_l1_region_polygon, t_l1_region_vertices, ExponentPoint2};
