//! Finite-sample statistics over projector samples. Variances and covariances
//! use the `1/n` normalization so that, for a 2-design, they coincide with the
//! population values over the Grassmannian.

use serde::{Deserialize, Serialize};

use crate::objectives::ProjectionSummary;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Uncorrected covariance `1/n sum (a - ā)(b - b̄)`.
pub fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64
}

pub fn variance(a: &[f64]) -> f64 {
    covariance(a, a)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    covariance(a, b) / (variance(a) * variance(b)).sqrt()
}

/// Ordinary least-squares line `b ≈ slope * a + intercept`.
pub fn ols(a: &[f64], b: &[f64]) -> (f64, f64) {
    let slope = covariance(a, b) / variance(a);
    (slope, mean(b) - slope * mean(a))
}

/// Sample moments of `(tvar, M, V)` over a list of projector summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean_tvar: f64,
    pub mean_m: f64,
    pub mean_v: f64,
    pub var_tvar: f64,
    pub var_m: f64,
    pub cov_m_tvar: f64,
    pub corr_m_tvar: f64,
    /// OLS of tvar on M.
    pub slope: f64,
    pub intercept: f64,
}

impl SampleMoments {
    pub fn from_summaries(summaries: &[ProjectionSummary]) -> Self {
        let tvar: Vec<f64> = summaries.iter().map(|s| s.tvar_projected).collect();
        let m: Vec<f64> = summaries.iter().map(|s| s.mean_rel_dist).collect();
        let v: Vec<f64> = summaries.iter().map(|s| s.var_rel_dist).collect();
        let (slope, intercept) = ols(&m, &tvar);
        Self {
            n: summaries.len(),
            mean_tvar: mean(&tvar),
            mean_m: mean(&m),
            mean_v: mean(&v),
            var_tvar: variance(&tvar),
            var_m: variance(&m),
            cov_m_tvar: covariance(&m, &tvar),
            corr_m_tvar: correlation(&m, &tvar),
            slope,
            intercept,
        }
    }
}

/// Nearest-rank percentile (`q` in `[0, 1]`) of an unsorted list.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}
