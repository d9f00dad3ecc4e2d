//! Text renderings of a fitted model: the familiar coefficient summary
//! block and a delimited machine-readable variant.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::{fit_statistics, FittedModel};
use crate::quantile::quantile_sorted;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub name: String,
    /// `None` for aliased columns, which are reported but not estimated.
    pub estimate: Option<CoefficientEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

pub fn coefficient_table(model: &FittedModel) -> Vec<CoefficientRow> {
    let df = model.n().saturating_sub(model.rank());
    let sigma = model.sigma2().map(f64::sqrt).unwrap_or(f64::NAN);
    let tdist = (df > 0).then(|| StudentsT::new(0.0, 1.0, df as f64).ok()).flatten();
    model
        .design()
        .column_names()
        .iter()
        .zip(model.coefficients())
        .zip(model.unscaled_covariance_diagonal())
        .map(|((name, coef), cov)| CoefficientRow {
            name: name.clone(),
            estimate: coef.map(|b| {
                let se = sigma * cov.unwrap_or(f64::NAN).sqrt();
                let t = b / se;
                let p = match &tdist {
                    Some(d) if t.is_finite() => 2.0 * d.cdf(-t.abs()),
                    _ => f64::NAN,
                };
                CoefficientEstimate {
                    estimate: b,
                    std_error: se,
                    t_value: t,
                    p_value: p,
                }
            }),
        })
        .collect()
}

/// Formats with `digits` significant digits, switching to scientific
/// notation for very large or small magnitudes.
fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NA".into() } else { x.to_string() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn format_p(p: f64) -> String {
    if p.is_nan() {
        "NA".into()
    } else if p < 2e-16 {
        "< 2e-16".into()
    } else {
        sig(p, 3)
    }
}

fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => ".",
        _ => " ",
    }
}

/// Plain-text summary: residual quantiles, coefficient table with
/// significance codes, residual standard error, R-squared and F-statistic.
pub fn render_summary(model: &FittedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Call:\nlm(formula = {})\n", model.formula());

    let mut r = model.residuals().to_vec();
    r.sort_by(f64::total_cmp);
    let _ = writeln!(out, "Residuals:");
    let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10} {:>10}", "Min", "1Q", "Median", "3Q", "Max");
    if !r.is_empty() {
        let q: Vec<String> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&p| sig(quantile_sorted(&r, p), 4))
            .collect();
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10} {:>10}", q[0], q[1], q[2], q[3], q[4]);
    }

    let rows = coefficient_table(model);
    let aliased = rows.iter().filter(|r| r.estimate.is_none()).count();
    if aliased > 0 {
        let _ = writeln!(
            out,
            "\nCoefficients: ({aliased} not defined because of singularities)"
        );
    } else {
        let _ = writeln!(out, "\nCoefficients:");
    }
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(11);
    let _ = writeln!(
        out,
        "{:<width$} {:>12} {:>12} {:>9} {:>10}",
        "", "Estimate", "Std. Error", "t value", "Pr(>|t|)"
    );
    for row in &rows {
        match &row.estimate {
            Some(e) => {
                let _ = writeln!(
                    out,
                    "{:<width$} {:>12} {:>12} {:>9} {:>10} {}",
                    row.name,
                    sig(e.estimate, 5),
                    sig(e.std_error, 5),
                    sig(e.t_value, 3),
                    format_p(e.p_value),
                    stars(e.p_value)
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<width$} {:>12} {:>12} {:>9} {:>10}",
                    row.name, "NA", "NA", "NA", "NA"
                );
            }
        }
    }
    let _ = writeln!(out, "---");
    let _ = writeln!(
        out,
        "Signif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n"
    );

    let n = model.n();
    let rank = model.rank();
    let df = n.saturating_sub(rank);
    let sigma = model.sigma2().map(f64::sqrt).unwrap_or(f64::NAN);
    let _ = writeln!(
        out,
        "Residual standard error: {} on {df} degrees of freedom",
        sig(sigma, 4)
    );
    match fit_statistics(model) {
        Ok(s) => {
            let _ = writeln!(
                out,
                "Multiple R-squared: {}, Adjusted R-squared: {}",
                sig(s.r_squared, 4),
                sig(s.adj_r_squared, 4)
            );
            let df1 = rank.saturating_sub(1);
            if df1 > 0 && df > 0 {
                let f = (s.r_squared / df1 as f64) / ((1.0 - s.r_squared) / df as f64);
                let p = FisherSnedecor::new(df1 as f64, df as f64)
                    .map(|d| d.sf(f))
                    .unwrap_or(f64::NAN);
                let p_text = if p < 2.2e-16 {
                    "< 2.2e-16".to_owned()
                } else {
                    sig(p, 4)
                };
                let _ = writeln!(
                    out,
                    "F-statistic: {} on {df1} and {df} DF, p-value: {p_text}",
                    sig(f, 4)
                );
            }
        }
        Err(e) => {
            let _ = writeln!(out, "Fit statistics unavailable: {e}");
        }
    }
    out
}

/// Tab-delimited coefficient table with a header row; aliased rows carry `NA`.
pub fn render_coefficients_tsv(model: &FittedModel) -> String {
    let mut out = String::from("term\testimate\tstd_error\tt_value\tp_value\n");
    for row in coefficient_table(model) {
        match row.estimate {
            Some(e) => {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    row.name, e.estimate, e.std_error, e.t_value, e.p_value
                );
            }
            None => {
                let _ = writeln!(out, "{}\tNA\tNA\tNA\tNA", row.name);
            }
        }
    }
    out
}
