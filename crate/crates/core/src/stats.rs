//! Scalar estimates with error bars.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mcmc,
    Quadrature,
    Exact,
    TimeAverage,
    Ensemble,
}

/// A Monte Carlo, quadrature or exact scalar with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n_effective: f64,
    pub method: Method,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n_effective: f64::INFINITY,
            method: Method::Exact,
        }
    }

    /// Number of combined standard errors separating two estimates.
    pub fn z_score(&self, other: &Self) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        let diff = (self.mean - other.mean).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }

    /// `true` when `other` lies within `k` combined standard errors.
    pub fn agrees_with(&self, other: &Self, k: f64) -> bool {
        self.z_score(other) <= k
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean with standard error from independent samples.
pub fn iid_estimate(xs: &[f64], method: Method) -> EstimateWithError {
    let n = xs.len() as f64;
    EstimateWithError {
        mean: mean(xs),
        stderr: (variance(xs) / n).sqrt(),
        n_effective: n,
        method,
    }
}

/// Default batch count for batch-means error estimation.
pub const DEFAULT_BATCHES: usize = 32;

/// Mean with batch-means standard error for a correlated series.
///
/// The series is cut into `n_batches` contiguous blocks (trailing samples
/// that do not fill a block are dropped from the error estimate only).
pub fn batch_means(xs: &[f64], n_batches: usize, method: Method) -> EstimateWithError {
    let n = xs.len();
    let m = mean(xs);
    let b = n_batches.max(2).min(n.max(1));
    let size = n / b;
    if size == 0 || b < 2 {
        return EstimateWithError {
            mean: m,
            stderr: f64::INFINITY,
            n_effective: n as f64,
            method,
        };
    }
    let batch: Vec<f64> = xs.chunks_exact(size).take(b).map(mean).collect();
    let stderr = (variance(&batch) / b as f64).sqrt();
    let var = variance(xs);
    let n_effective = if stderr > 0.0 {
        (var / (stderr * stderr)).min(n as f64)
    } else {
        n as f64
    };
    EstimateWithError {
        mean: m,
        stderr,
        n_effective,
        method,
    }
}

/// Sample covariance matrix of row-major draws (`draws[s][i]`).
pub fn covariance(draws: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = draws.len();
    let d = draws.first().map_or(0, Vec::len);
    let mut mu = vec![0.0; d];
    for row in draws {
        for (m, x) in mu.iter_mut().zip(row) {
            *m += x;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    let mut centred = vec![0.0; d];
    for row in draws {
        for ((c, x), m) in centred.iter_mut().zip(row).zip(&mu) {
            *c = x - m;
        }
        for (i, cov_row) in cov.iter_mut().enumerate() {
            for (c, dj) in cov_row[i..].iter_mut().zip(&centred[i..]) {
                *c += centred[i] * dj;
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    cov.iter_mut().flatten().for_each(|c| *c /= denom);
    let upper = cov.clone();
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, c) in row[..i].iter_mut().enumerate() {
            *c = upper[j][i];
        }
    }
    cov
}

/// Pearson correlation of two equally long series.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Least-squares slope of `ys` against `xs`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
