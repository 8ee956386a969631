//! Summary statistics, empirical distributions and convergence diagnostics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("grid and values differ in length ({grid} vs {values})")]
    LengthMismatch { grid: usize, values: usize },
    #[error("grid must be strictly increasing")]
    UnsortedGrid,
    #[error("degenerate sample: zero variance")]
    Degenerate,
    #[error("insufficient tail mass: {points} usable grid points")]
    InsufficientTail { points: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// Quantile levels reported by [`summarize`].
pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n - 1) variance; zero for a single sample.
    pub variance: f64,
    pub stderr: f64,
    /// Values at [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 7],
}

impl SummaryStats {
    pub fn q(&self, level: f64) -> Option<f64> {
        QUANTILE_LEVELS
            .iter()
            .position(|&l| (l - level).abs() < 1e-12)
            .map(|i| self.quantiles[i])
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Mergeable running moments (Welford / Chan).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + delta * other.count as f64 / n,
            m2: self.m2 + other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / n,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * level.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    // Moments are accumulated in sorted order so the result does not depend
    // on the order the replicas arrived in.
    let sorted = sorted_copy(samples);
    let m: Moments = sorted.iter().copied().collect();
    let mut quantiles = [0.0; 7];
    for (q, &l) in quantiles.iter_mut().zip(QUANTILE_LEVELS.iter()) {
        *q = quantile_sorted(&sorted, l);
    }
    Ok(SummaryStats {
        count: m.count,
        mean: m.mean,
        variance: m.variance(),
        stderr: m.stderr(),
        quantiles,
    })
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    pub fn of(samples: &[f64]) -> Estimate {
        let m: Moments = samples.iter().copied().collect();
        Estimate {
            mean: m.mean,
            stderr: m.stderr(),
            count: m.count,
        }
    }

    /// Standardized distance to an exact target value.
    pub fn z_against(&self, target: f64) -> f64 {
        z_score(self.mean - target, self.stderr)
    }

    /// Standardized difference between two independent estimates.
    pub fn z_versus(&self, other: &Estimate) -> f64 {
        z_score(
            self.mean - other.mean,
            (self.stderr * self.stderr + other.stderr * other.stderr).sqrt(),
        )
    }
}

/// `diff / se`, treating an exact zero difference as z = 0 even when se = 0.
pub fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY * diff.signum()
    } else {
        diff / se
    }
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_a - F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let a = sorted_copy(a);
    let b = sorted_copy(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// Empirical distribution evaluated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfTable {
    pub sorted: Vec<f64>,
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl EcdfTable {
    pub fn new(samples: &[f64], grid: &[f64]) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::Empty);
        }
        let sorted = sorted_copy(samples);
        let cdf = grid.iter().map(|&g| ecdf_at(&sorted, g)).collect();
        Ok(Self {
            sorted,
            grid: grid.to_vec(),
            cdf,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        ecdf_at(&self.sorted, x)
    }
}

fn ecdf_at(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64
}

/// Least-squares slope of `ln P(X >= lambda * mean)` against `lambda`,
/// using only grid points where the empirical survival is at least
/// `50 / count`.
pub fn survival_tail_slope(samples: &[f64], lambda_grid: &[f64]) -> Result<f64, StatsError> {
    let fit = survival_tail_fit(samples, lambda_grid)?;
    Ok(fit.slope)
}

/// Points and fitted line behind [`survival_tail_slope`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub lambdas: Vec<f64>,
    pub log_survival: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn survival_tail_fit(samples: &[f64], lambda_grid: &[f64]) -> Result<TailFit, StatsError> {
    const MIN_SAMPLES: usize = 1000;
    if samples.len() < MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let m: Moments = samples.iter().copied().collect();
    if m.variance() == 0.0 || m.mean == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let sorted = sorted_copy(samples);
    let n = sorted.len() as f64;
    let floor = 50.0 / n;
    let mut lambdas = Vec::new();
    let mut logs = Vec::new();
    for &l in lambda_grid {
        let threshold = l * m.mean;
        let surv = (sorted.len() - sorted.partition_point(|&s| s < threshold)) as f64 / n;
        if surv >= floor {
            lambdas.push(l);
            logs.push(surv.ln());
        }
    }
    if lambdas.len() < 2 {
        return Err(StatsError::InsufficientTail {
            points: lambdas.len(),
        });
    }
    let (slope, intercept) = least_squares(&lambdas, &logs);
    Ok(TailFit {
        lambdas,
        log_survival: logs,
        slope,
        intercept,
    })
}

impl TailFit {
    /// Whether the far half of the log-survival points lies on or below the
    /// fitted line, up to `z` binomial standard errors. `count` is the
    /// sample size behind the fit.
    pub fn dominated_by_line(&self, count: usize, z: f64) -> bool {
        let k = self.lambdas.len();
        (k / 2..k).all(|i| {
            let surv = self.log_survival[i].exp();
            let se = ((1.0 - surv) / (count as f64 * surv)).sqrt();
            self.log_survival[i] <= self.slope * self.lambdas[i] + self.intercept + z * se
        })
    }
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn trapezoid_integral(grid: &[f64], values: &[f64]) -> Result<f64, StatsError> {
    if grid.len() != values.len() {
        return Err(StatsError::LengthMismatch {
            grid: grid.len(),
            values: values.len(),
        });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(StatsError::UnsortedGrid);
    }
    Ok(grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum())
}
