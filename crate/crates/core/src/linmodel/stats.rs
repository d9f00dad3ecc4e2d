use std::f64::consts::PI;

use super::FittedModel;
use crate::error::{Error, Result};

/// AIC penalty per estimated coefficient used during selection.
pub const DEFAULT_AIC_PENALTY: f64 = 2.0;

/// Relative floor below which `ln(RSS/n)` is treated as undefined.
const RSS_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStatistics {
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Full Gaussian log-likelihood AIC, counting the variance parameter.
    pub aic_full: f64,
    /// Constant-free `n ln(RSS/n) + k * rank`.
    pub aic_selection: f64,
    pub sigma_hat: f64,
}

/// Sum of squares about the mean.
pub fn total_sum_of_squares(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

pub fn rss_floor(tss: f64) -> f64 {
    RSS_FLOOR_REL * tss
}

/// `1 - (1 - R²)(n - 1)/(n - rank)`.
pub fn adjusted_r_squared(r_squared: f64, n: usize, rank: usize) -> Result<f64> {
    if n <= rank {
        return Err(Error::DegreesOfFreedom {
            what: "adjusted R-squared",
            n,
            rank,
        });
    }
    Ok(1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - rank) as f64)
}

/// `n ln(2π) + n ln(RSS/n) + n + 2(rank + 1)`.
pub fn aic_full_value(n: usize, rss: f64, rank: usize) -> f64 {
    let nf = n as f64;
    nf * (2.0 * PI).ln() + nf * (rss / nf).ln() + nf + 2.0 * (rank + 1) as f64
}

/// `n ln(RSS/n) + k * rank`.
pub fn aic_selection_value(n: usize, rss: f64, rank: usize, k: f64) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + k * rank as f64
}

pub fn fit_statistics(model: &FittedModel) -> Result<FitStatistics> {
    fit_statistics_with_penalty(model, DEFAULT_AIC_PENALTY)
}

pub fn fit_statistics_with_penalty(model: &FittedModel, k: f64) -> Result<FitStatistics> {
    let n = model.n();
    let rank = model.rank();
    let rss = model.rss();
    let tss = model.tss();
    let floor = rss_floor(tss);
    if rss <= floor {
        return Err(Error::AicUndefined { rss, floor });
    }
    // a rank-one model with an intercept fits the mean exactly
    let r_squared = if rank <= 1 { 0.0 } else { 1.0 - rss / tss };
    let adj_r_squared = adjusted_r_squared(r_squared, n, rank)?;
    Ok(FitStatistics {
        r_squared,
        adj_r_squared,
        aic_full: aic_full_value(n, rss, rank),
        aic_selection: aic_selection_value(n, rss, rank, k),
        sigma_hat: model.sigma2()?.sqrt(),
    })
}
