//! Case-deletion diagnostics computed in closed form from the residuals and
//! the hat-matrix diagonal.

use crate::error::{Error, Result};
use crate::linmodel::FittedModel;
use crate::quantile::quantile;

/// `1 - h` below this is treated as an exact-fit point.
const LEVERAGE_ONE_TOL: f64 = 1e-12;

/// Relative slack when comparing Cook's distances against the quantile cutoff.
const TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudentizedKind {
    Internal,
    External,
}

fn check_leverage(model: &FittedModel) -> Result<()> {
    for (i, &h) in model.leverage().iter().enumerate() {
        if 1.0 - h < LEVERAGE_ONE_TOL {
            return Err(Error::ExactFitPoint { row: i + 1 });
        }
    }
    Ok(())
}

/// Leave-one-out prediction errors `e_i / (1 - h_i)`.
pub fn press_residuals(model: &FittedModel) -> Result<Vec<f64>> {
    check_leverage(model)?;
    Ok(model
        .residuals()
        .iter()
        .zip(model.leverage())
        .map(|(e, h)| e / (1.0 - h))
        .collect())
}

fn require_df(model: &FittedModel, extra: usize, what: &'static str) -> Result<()> {
    if model.n() <= model.rank() + extra {
        return Err(Error::DegreesOfFreedom {
            what,
            n: model.n(),
            rank: model.rank(),
        });
    }
    Ok(())
}

/// `D_i = e_i^2 h_i / (r s^2 (1 - h_i)^2)` with `s^2 = RSS / (n - r)`.
pub fn cooks_distance(model: &FittedModel) -> Result<Vec<f64>> {
    require_df(model, 0, "Cook's distance")?;
    check_leverage(model)?;
    if model.is_exact_fit() {
        return Ok(vec![0.0; model.n()]);
    }
    let s2 = model.sigma2()?;
    let r = model.rank() as f64;
    Ok(model
        .residuals()
        .iter()
        .zip(model.leverage())
        .map(|(&e, &h)| {
            if e == 0.0 {
                0.0
            } else {
                e * e * h / (r * s2 * (1.0 - h).powi(2))
            }
        })
        .collect())
}

/// Internally or externally studentized residuals.
pub fn studentized(model: &FittedModel, kind: StudentizedKind) -> Result<Vec<f64>> {
    match kind {
        StudentizedKind::Internal => require_df(model, 0, "internally studentized residuals")?,
        StudentizedKind::External => require_df(model, 1, "externally studentized residuals")?,
    }
    check_leverage(model)?;
    if model.is_exact_fit() {
        return Ok(vec![0.0; model.n()]);
    }
    let n = model.n() as f64;
    let r = model.rank() as f64;
    let rss = model.rss();
    let s = model.sigma2()?.sqrt();
    Ok(model
        .residuals()
        .iter()
        .zip(model.leverage())
        .map(|(&e, &h)| {
            if e == 0.0 {
                return 0.0;
            }
            match kind {
                StudentizedKind::Internal => e / (s * (1.0 - h).sqrt()),
                StudentizedKind::External => {
                    let s2_del = (rss - e * e / (1.0 - h)) / (n - r - 1.0);
                    e / (s2_del.max(0.0).sqrt() * (1.0 - h).sqrt())
                }
            }
        })
        .collect())
}

/// `t_i * sqrt(h_i / (1 - h_i))` with `t_i` the externally studentized residual.
pub fn dffits(model: &FittedModel) -> Result<Vec<f64>> {
    let t = studentized(model, StudentizedKind::External)?;
    Ok(t.iter()
        .zip(model.leverage())
        .map(|(t, h)| t * (h / (1.0 - h)).sqrt())
        .collect())
}

/// Everything needed to redraw a leverage-versus-Cook's-distance plot.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    pub leverage: Vec<f64>,
    pub mean_leverage: f64,
    /// `h_i > 2 * mean_leverage`.
    pub high_leverage: Vec<bool>,
    pub cooks_d: Vec<f64>,
    /// Cook's distance at the `(n - top_m) / n` quantile.
    pub cook_threshold: f64,
    /// `D_i >= cook_threshold`; ties are all flagged.
    pub top_influence: Vec<bool>,
    pub press: Vec<f64>,
    pub studentized_internal: Vec<f64>,
    /// `None` when `n - rank - 1 < 1`.
    pub dffits: Option<Vec<f64>>,
    pub studentized_external: Option<Vec<f64>>,
}

impl InfluenceReport {
    pub fn leverage_cutoff(&self) -> f64 {
        2.0 * self.mean_leverage
    }

    pub fn high_leverage_rows(&self) -> Vec<usize> {
        flagged(&self.high_leverage)
    }

    pub fn top_influence_rows(&self) -> Vec<usize> {
        flagged(&self.top_influence)
    }
}

fn flagged(v: &[bool]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter_map(|(i, &f)| f.then_some(i))
        .collect()
}

pub fn influence_flags(model: &FittedModel, top_m: usize) -> Result<InfluenceReport> {
    let n = model.n();
    if top_m == 0 || top_m > n {
        return Err(Error::InvalidParameter(format!(
            "top_m = {top_m} must lie in 1..={n}"
        )));
    }
    let leverage = model.leverage().to_vec();
    let mean_leverage = leverage.iter().sum::<f64>() / n as f64;
    let high_leverage = leverage.iter().map(|&h| h > 2.0 * mean_leverage).collect();
    let cooks_d = cooks_distance(model)?;
    let p = (n - top_m) as f64 / n as f64;
    let cook_threshold = quantile(&cooks_d, p);
    // values within rounding of the threshold count as ties
    let cutoff = cook_threshold - TIE_REL_TOL * cook_threshold.abs();
    let top_influence = cooks_d.iter().map(|&d| d >= cutoff).collect();
    let external_ok = n > model.rank() + 1;
    Ok(InfluenceReport {
        leverage,
        mean_leverage,
        high_leverage,
        cooks_d,
        cook_threshold,
        top_influence,
        press: press_residuals(model)?,
        studentized_internal: studentized(model, StudentizedKind::Internal)?,
        dffits: external_ok.then(|| dffits(model)).transpose()?,
        studentized_external: external_ok
            .then(|| studentized(model, StudentizedKind::External))
            .transpose()?,
    })
}
