pub mod adjoint;
pub mod cube;
pub mod frames;
pub mod haar;
pub mod l1;
pub mod majorize;
pub mod norm;
pub mod pushforward;
pub mod ratios;
pub mod region;
pub mod simplex;

use simplex_core::exponents::parse_rational;
use simplex_core::Group;

/// What a command hands back for printing.
pub struct Verdict {
    pub pass: bool,
    pub lines: Vec<String>,
}

/// Accepts decimals and exact fractions such as `1/64`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    if s.contains('/') {
        let q = parse_rational(s).map_err(|e| e.to_string())?;
        return Ok(*q.numer() as f64 / *q.denom() as f64);
    }
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

pub fn parse_group(s: &str) -> Result<Group, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "o" | "o(d)" | "orthogonal" => Ok(Group::Orthogonal),
        "so" | "so(d)" | "special" => Ok(Group::Special),
        other => Err(format!("unknown group {other:?}; use orthogonal or special")),
    }
}

pub fn pass_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
