use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::fill_sphere_point;
use crate::rng::{stream, tag};
use crate::stats::chi_square;

/// Radius of the support of `a − b` for `(a, b)` uniform on `S^{2d-1}`:
/// `|a − b|² = 1 − 2a·b ≤ 2(|a|² + |b|²) = 2`.
pub const DIFFERENCE_SUPPORT: f64 = SQRT_2;

/// Radius of the support read off the change of variables `t = 2x`,
/// `|x| ≤ 1`.
pub const NOMINAL_SUPPORT: f64 = 2.0;

/// Density `c (1 − |t|²/ρ²)^{(d−2)/2}` on the ball `|t| ≤ ρ` in `R^d`,
/// normalized to a probability density. With `|t|²/ρ²` distributed as
/// `Beta(d/2, d/2)` the radial law has a closed-form CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardDensity {
    pub d: usize,
    pub radius: f64,
    pub normalization: f64,
}

/// Surface area of the unit sphere `S^{d-1}`.
fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

impl PushforwardDensity {
    pub fn new(d: usize, radius: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::dim(format!("pushforward density needs d >= 2, got {d}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::arg(format!("support radius must be positive, got {radius}")));
        }
        let half = d as f64 / 2.0;
        let normalization = 2.0 / (sphere_area(d) * radius.powi(d as i32) * beta(half, half));
        Ok(Self { d, radius, normalization })
    }

    /// The radius-2 form.
    pub fn nominal(d: usize) -> Result<Self> {
        Self::new(d, NOMINAL_SUPPORT)
    }

    /// Density at distance `r` from the origin.
    pub fn profile(&self, r: f64) -> f64 {
        if r > self.radius {
            return 0.0;
        }
        let s = 1.0 - (r / self.radius).powi(2);
        let e = (self.d as f64 - 2.0) / 2.0;
        if e == 0.0 {
            self.normalization
        } else {
            self.normalization * s.max(0.0).powf(e)
        }
    }

    pub fn density(&self, t: &[f64]) -> f64 {
        self.profile(t.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// Density of `|t|`.
    pub fn radial_marginal(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        sphere_area(self.d) * r.powi(self.d as i32 - 1) * self.profile(r)
    }

    /// `P(|t| ≤ r)`.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let x = (r / self.radius).powi(2).min(1.0);
        let half = self.d as f64 / 2.0;
        beta_reg(half, half, x)
    }
}

/// `c_d (1 − |t|²/4)^{(d−2)/2}` on `|t| ≤ 2`.
pub fn pushforward_density(d: usize, t: &[f64]) -> Result<f64> {
    if t.len() != d {
        return Err(Error::dim(format!("point has {} coordinates, expected {d}", t.len())));
    }
    Ok(PushforwardDensity::nominal(d)?.density(t))
}

/// Histogram of `|a − b|` over `[0, support]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub d: usize,
    pub support: f64,
    pub counts: Vec<u64>,
    /// Samples beyond `support`.
    pub overflow: u64,
    pub n_samples: u64,
    pub max_observed: f64,
    pub seed: u64,
}

/// Goodness of fit of a histogram against a candidate density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramFit {
    pub chi_square: f64,
    pub p_value: f64,
    /// Largest bin difference between empirical and model densities in the
    /// radial coordinate rescaled to `[0, 2]`.
    pub sup_deviation: f64,
    /// The same difference in the original coordinate.
    pub sup_deviation_raw: f64,
    /// Model probability outside the histogram range.
    pub tail_probability: f64,
}

impl RadialHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        self.support / self.bins() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins()).map(|i| i as f64 * self.width()).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins()).map(|i| (i as f64 + 0.5) * self.width()).collect()
    }

    /// Count divided by `n · width` per bin.
    pub fn empirical_density(&self) -> Vec<f64> {
        let scale = (self.n_samples as f64 * self.width()).recip();
        self.counts.iter().map(|c| *c as f64 * scale).collect()
    }

    /// `Σ density · width`; 1 when nothing overflowed.
    pub fn total_mass(&self) -> f64 {
        self.empirical_density().iter().sum::<f64>() * self.width()
    }

    /// Bin probabilities under `model`.
    pub fn model_probabilities(&self, model: &PushforwardDensity) -> Vec<f64> {
        let e = self.edges();
        e.windows(2)
            .map(|w| model.radial_cdf(w[1]) - model.radial_cdf(w[0]))
            .collect()
    }

    pub fn compare(&self, model: &PushforwardDensity) -> HistogramFit {
        let mut probs = self.model_probabilities(model);
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        let mut observed = self.counts.clone();
        if tail > 1e-12 || self.overflow > 0 {
            probs.push(tail);
            observed.push(self.overflow);
        }
        let (chi, p) = chi_square(&observed, &probs);
        let width = self.width();
        let raw = self
            .empirical_density()
            .iter()
            .zip(&probs)
            .map(|(emp, pr)| (emp - pr / width).abs())
            .fold(0.0, f64::max);
        HistogramFit {
            chi_square: chi,
            p_value: p,
            sup_deviation: raw * self.support / NOMINAL_SUPPORT,
            sup_deviation_raw: raw,
            tail_probability: tail,
        }
    }
}

const HISTOGRAM_CHUNK: usize = 1 << 16;

/// Samples `(a, b)` uniformly on `S^{2d-1}` and bins `|a − b|` over
/// `[0, support]` (use [`DIFFERENCE_SUPPORT`] for the true range).
pub fn empirical_difference_histogram(
    d: usize,
    n_samples: usize,
    bins: usize,
    support: f64,
    seed: u64,
    execution: Execution,
) -> Result<RadialHistogram> {
    if d < 2 {
        return Err(Error::dim(format!("difference histogram needs d >= 2, got {d}")));
    }
    if bins < 2 {
        return Err(Error::arg(format!("need at least 2 bins, got {bins}")));
    }
    if !(support > 0.0) {
        return Err(Error::arg("histogram support must be positive"));
    }
    let chunks = n_samples.div_ceil(HISTOGRAM_CHUNK);
    let width = support / bins as f64;
    let partial = execution.map(chunks, |c| {
        let mut rng = stream(seed, tag::HISTOGRAM, c as u64);
        let mut ab = vec![0.0; 2 * d];
        let mut counts = vec![0u64; bins];
        let mut overflow = 0u64;
        let mut max_r: f64 = 0.0;
        let count = HISTOGRAM_CHUNK.min(n_samples - c * HISTOGRAM_CHUNK);
        for _ in 0..count {
            fill_sphere_point(&mut rng, &mut ab);
            let r = (0..d).map(|i| (ab[i] - ab[d + i]).powi(2)).sum::<f64>().sqrt();
            max_r = max_r.max(r);
            let b = (r / width) as usize;
            if r <= support && b >= bins {
                counts[bins - 1] += 1;
            } else if b < bins {
                counts[b] += 1;
            } else {
                overflow += 1;
            }
        }
        (counts, overflow, max_r)
    });
    let mut counts = vec![0u64; bins];
    let mut overflow = 0;
    let mut max_observed: f64 = 0.0;
    for (c, o, m) in partial {
        counts.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        overflow += o;
        max_observed = max_observed.max(m);
    }
    Ok(RadialHistogram {
        d,
        support,
        counts,
        overflow,
        n_samples: n_samples as u64,
        max_observed,
        seed,
    })
}
