//! Small statistics helpers: running moments, least-squares slopes and the
//! chi-square goodness-of-fit test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

/// Running mean and variance, kept as sums shifted by the first sample so a
/// constant stream has exactly zero variance and the update needs no division.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    shift: f64,
    s1: f64,
    s2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.shift = x;
        }
        self.n += 1;
        let d = x - self.shift;
        self.s1 += d;
        self.s2 += d * d;
    }

    /// Combines two partial accumulations.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let c = other.shift - self.shift;
        let nb = other.n as f64;
        Moments {
            n: self.n + other.n,
            shift: self.shift,
            s1: self.s1 + other.s1 + nb * c,
            s2: self.s2 + other.s2 + 2.0 * c * other.s1 + nb * c * c,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.shift + self.s1 / self.n as f64
        }
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            let n = self.n as f64;
            ((self.s2 - self.s1 * self.s1 / n) / (n - 1.0)).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub slope_half_width: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_half_width = if n > 2 {
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(1.96);
        t * se
    } else {
        f64::INFINITY
    };
    Some(LineFit {
        slope,
        intercept,
        slope_half_width,
    })
}

/// Common-slope fit with one intercept per group (the within estimator).
/// With a single group this is [`fit_line`]. The reported intercept is the
/// pooled one, `mean(y) − slope · mean(x)`.
pub fn fit_line_grouped(groups: &[usize], x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if y.len() != n || groups.len() != n {
        return None;
    }
    let mut labels: Vec<usize> = groups.to_vec();
    labels.sort_unstable();
    labels.dedup();
    let g = labels.len();
    if n < g + 1 {
        return None;
    }
    let mut xt = x.to_vec();
    let mut yt = y.to_vec();
    for label in &labels {
        let members: Vec<usize> = (0..n).filter(|&i| groups[i] == *label).collect();
        let m = members.len() as f64;
        let mx = members.iter().map(|&i| x[i]).sum::<f64>() / m;
        let my = members.iter().map(|&i| y[i]).sum::<f64>() / m;
        for &i in &members {
            xt[i] -= mx;
            yt[i] -= my;
        }
    }
    let sxx: f64 = xt.iter().map(|v| v * v).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xt.iter().zip(&yt).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let nf = n as f64;
    let intercept = y.iter().sum::<f64>() / nf - slope * x.iter().sum::<f64>() / nf;
    let df = n as f64 - g as f64 - 1.0;
    let slope_half_width = if df > 0.0 {
        let sse: f64 = xt.iter().zip(&yt).map(|(a, b)| (b - slope * a).powi(2)).sum();
        let se = (sse / df / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, df).map(|d| d.inverse_cdf(0.975)).unwrap_or(1.96);
        t * se
    } else {
        f64::INFINITY
    };
    Some(LineFit {
        slope,
        intercept,
        slope_half_width,
    })
}

/// Pearson chi-square statistic and upper-tail p-value for observed counts
/// against cell probabilities. Cells with zero expected probability are
/// skipped; the degrees of freedom are `cells - 1`.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> (f64, f64) {
    let total: u64 = observed.iter().sum();
    let nf = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            continue;
        }
        let e = nf * p;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let df = cells.saturating_sub(1).max(1) as f64;
    let p_value = ChiSquared::new(df).map(|d| 1.0 - d.cdf(stat)).unwrap_or(f64::NAN);
    (stat, p_value)
}
