//! Ordinary least squares via pivoted Householder QR.

mod report;
mod stats;

pub use report::{
    coefficient_table, render_coefficients_tsv, render_summary, CoefficientEstimate, CoefficientRow,
};
pub use stats::{
    adjusted_r_squared, aic_full_value, aic_selection_value, fit_statistics,
    fit_statistics_with_penalty, rss_floor, total_sum_of_squares, FitStatistics,
    DEFAULT_AIC_PENALTY,
};

use crate::dataset::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{PivotedQr, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseTransform {
    Identity,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Relative pivot tolerance: a column is aliased when `|R_kk| < tol * |R_11|`.
    pub rank_tol: f64,
    /// Reject designs containing an all-zero column instead of aliasing it.
    pub strict: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            rank_tol: DEFAULT_RANK_TOL,
            strict: false,
        }
    }
}

/// A fitted least-squares model. Aliased columns carry `None` coefficients.
#[derive(Debug, Clone)]
pub struct FittedModel {
    design: DesignMatrix,
    coefficients: Vec<Option<f64>>,
    fitted: Vec<f64>,
    residuals: Vec<f64>,
    leverage: Vec<f64>,
    rss: f64,
    rank: usize,
    unscaled_cov: Vec<Option<f64>>,
    transform: ResponseTransform,
}

impl FittedModel {
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn coefficients(&self) -> &[Option<f64>] {
        &self.coefficients
    }

    /// Coefficient vector with aliased entries set to zero.
    pub fn coefficients_or_zero(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.unwrap_or(0.0)).collect()
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn leverage(&self) -> &[f64] {
        &self.leverage
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn transform(&self) -> ResponseTransform {
        self.transform
    }

    pub fn aliased_columns(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j].is_none())
            .collect()
    }

    /// Diagonal of `(X'X)^-1` restricted to the non-aliased columns.
    pub fn unscaled_covariance_diagonal(&self) -> &[Option<f64>] {
        &self.unscaled_cov
    }

    /// `RSS / (n - rank)`.
    pub fn sigma2(&self) -> Result<f64> {
        let n = self.n();
        if n <= self.rank {
            return Err(Error::DegreesOfFreedom {
                what: "residual variance",
                n,
                rank: self.rank,
            });
        }
        Ok(self.rss / (n - self.rank) as f64)
    }

    pub fn tss(&self) -> f64 {
        total_sum_of_squares(self.design.y())
    }

    /// True when the residuals vanish relative to the response spread, i.e.
    /// `RSS <= 1e-12 * TSS`.
    pub fn is_exact_fit(&self) -> bool {
        self.rss <= rss_floor(self.tss())
    }

    pub fn formula(&self) -> String {
        self.design.formula()
    }
}

pub fn fit_ols(design: &DesignMatrix) -> Result<FittedModel> {
    fit_ols_with(design, FitOptions::default())
}

pub fn fit_ols_with(design: &DesignMatrix, opts: FitOptions) -> Result<FittedModel> {
    fit_impl(design.clone(), opts, ResponseTransform::Identity)
}

fn fit_impl(
    design: DesignMatrix,
    opts: FitOptions,
    transform: ResponseTransform,
) -> Result<FittedModel> {
    let n = design.nrows();
    if n < 1 {
        return Err(Error::InsufficientData {
            what: "least-squares fit",
            required: 1,
            available: n,
        });
    }
    if opts.strict {
        for j in 0..design.ncols() {
            if design.x().column(j).iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroColumn(design.column_names()[j].clone()));
            }
        }
    }
    let qr = PivotedQr::with_tolerance(design.x().clone(), opts.rank_tol);
    let ls = qr.solve(design.y());
    let beta: Vec<f64> = ls.coefficients.iter().map(|c| c.unwrap_or(0.0)).collect();
    let fitted = design.x().mul_vec(&beta);
    let residuals: Vec<f64> = design
        .y()
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();
    let rss = residuals.iter().map(|e| e * e).sum();
    let leverage = qr.leverage();
    let unscaled_cov = qr.unscaled_covariance_diagonal();
    Ok(FittedModel {
        design,
        coefficients: ls.coefficients,
        fitted,
        residuals,
        leverage,
        rss,
        rank: ls.rank,
        unscaled_cov,
        transform,
    })
}

/// `X_new * beta` on the model's response scale. The new design must carry
/// the same columns as the model's design.
pub fn predict(model: &FittedModel, new_design: &DesignMatrix) -> Result<Vec<f64>> {
    let ours = model.design.column_names();
    let theirs = new_design.column_names();
    if ours != theirs {
        let missing: Vec<&str> = ours
            .iter()
            .filter(|c| !theirs.contains(c))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = theirs
            .iter()
            .filter(|c| !ours.contains(c))
            .map(String::as_str)
            .collect();
        return Err(Error::TermMismatch(format!(
            "missing columns [{}], unexpected columns [{}]",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let model_terms: Vec<&str> = model.design.terms().iter().map(|t| t.name.as_str()).collect();
    let new_terms: Vec<&str> = new_design.terms().iter().map(|t| t.name.as_str()).collect();
    if model_terms != new_terms {
        return Err(Error::TermMismatch("term groups differ".into()));
    }
    Ok(new_design.x().mul_vec(&model.coefficients_or_zero()))
}

/// Refits the same design against `ln(y)`.
pub fn refit_log_response(model: &FittedModel) -> Result<FittedModel> {
    if model.transform == ResponseTransform::Log {
        return Err(Error::AlreadyLogTransformed);
    }
    let y = model.design.y();
    if let Some((row, &value)) = y.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveResponse {
            row: row + 1,
            value,
        });
    }
    let name = format!("log({})", model.design.response_name());
    let design = model
        .design
        .with_response(&name, y.iter().map(|v| v.ln()).collect())?;
    fit_impl(design, FitOptions::default(), ResponseTransform::Log)
}
