use crate::error::{Error, Result};
use crate::quantile::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub iqr: f64,
}

pub fn five_number_summary(values: &[f64]) -> Result<FiveNumberSummary> {
    if values.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let q3 = quantile_sorted(&v, 0.75);
    Ok(FiveNumberSummary {
        min: v[0],
        q1,
        median: quantile_sorted(&v, 0.5),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q3,
        max: v[v.len() - 1],
        iqr: q3 - q1,
    })
}

/// Box-and-whisker geometry with `1.5 * IQR` fences.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotStats {
    pub summary: FiveNumberSummary,
    pub lower_fence: f64,
    pub upper_fence: f64,
    /// Most extreme observations inside the fences.
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// `(index, value)` of every observation outside the fences, in input order.
    pub outliers: Vec<(usize, f64)>,
}

pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    let summary = five_number_summary(values)?;
    let lower_fence = summary.q1 - 1.5 * summary.iqr;
    let upper_fence = summary.q3 + 1.5 * summary.iqr;
    let inside = |v: f64| v >= lower_fence && v <= upper_fence;
    let mut whisker_low = f64::INFINITY;
    let mut whisker_high = f64::NEG_INFINITY;
    let mut outliers = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if inside(v) {
            whisker_low = whisker_low.min(v);
            whisker_high = whisker_high.max(v);
        } else {
            outliers.push((i, v));
        }
    }
    Ok(BoxplotStats {
        summary,
        lower_fence,
        upper_fence,
        whisker_low,
        whisker_high,
        outliers,
    })
}
