use std::fmt::Write as _;

use crate::diagnostics::{dffits, press_residuals};
use crate::error::{Error, Result};
use crate::linmodel::{fit_statistics, FittedModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonColumn {
    pub name: String,
    pub press_ss: f64,
    pub aic_full: f64,
    pub adj_r_squared: f64,
    /// `None` when the model leaves no leave-one-out degrees of freedom.
    pub dffits_ss: Option<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub columns: Vec<ComparisonColumn>,
}

const ROW_LABELS: [&str; 5] = [
    "sum-of-squared PRESS",
    "AIC",
    "Adjusted R-squared",
    "sum-of-squared DFFITS",
    "Number of Predictors",
];

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn compare_models(models: &[(&str, &FittedModel)]) -> Result<ComparisonTable> {
    if let Some((_, first)) = models.first() {
        if let Some((_, other)) = models.iter().find(|(_, m)| m.n() != first.n()) {
            return Err(Error::RowCountMismatch(first.n(), other.n()));
        }
    }
    let columns = models
        .iter()
        .map(|(name, m)| {
            let stats = fit_statistics(m)?;
            let dffits_ss = if m.n() > m.rank() + 1 {
                Some(sum_sq(&dffits(m)?))
            } else {
                None
            };
            Ok(ComparisonColumn {
                name: (*name).to_owned(),
                press_ss: sum_sq(&press_residuals(m)?),
                aic_full: stats.aic_full,
                adj_r_squared: stats.adj_r_squared,
                dffits_ss,
                rank: m.rank(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable { columns })
}

impl ComparisonTable {
    fn cells(&self, row: usize, precise: bool) -> Vec<String> {
        let fmt = |v: f64| {
            if precise {
                v.to_string()
            } else {
                format!("{v:.4}")
            }
        };
        self.columns
            .iter()
            .map(|c| match row {
                0 => fmt(c.press_ss),
                1 => fmt(c.aic_full),
                2 => fmt(c.adj_r_squared),
                3 => c.dffits_ss.map_or_else(|| "NA".to_owned(), fmt),
                _ => c.rank.to_string(),
            })
            .collect()
    }

    /// Aligned text table, four decimals.
    pub fn render_text(&self) -> String {
        let label_w = ROW_LABELS.iter().map(|l| l.len()).max().unwrap_or(0);
        let rows: Vec<Vec<String>> = (0..ROW_LABELS.len()).map(|r| self.cells(r, false)).collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| rows.iter().map(|r| r[j].len()).chain([c.name.len()]).max().unwrap_or(0))
            .collect();
        let mut out = format!("{:label_w$}", "");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", c.name);
        }
        out.push('\n');
        for (label, cells) in ROW_LABELS.iter().zip(&rows) {
            let _ = write!(out, "{label:label_w$}");
            for (cell, w) in cells.iter().zip(&widths) {
                let _ = write!(out, "  {cell:>w$}");
            }
            out.push('\n');
        }
        out
    }

    /// Tab-delimited, one row per statistic, full precision.
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("statistic");
        for c in &self.columns {
            out.push('\t');
            out.push_str(&c.name);
        }
        out.push('\n');
        for (r, label) in ROW_LABELS.iter().enumerate() {
            out.push_str(label);
            for cell in self.cells(r, true) {
                out.push('\t');
                out.push_str(&cell);
            }
            out.push('\n');
        }
        out
    }
}

/// Two comparison tables as one, with column names suffixed by the given tags.
pub fn render_side_by_side(
    left: &ComparisonTable,
    left_tag: &str,
    right: &ComparisonTable,
    right_tag: &str,
) -> ComparisonTable {
    let tagged = |t: &ComparisonTable, tag: &str| -> Vec<ComparisonColumn> {
        t.columns
            .iter()
            .map(|c| ComparisonColumn {
                name: format!("{}_{tag}", c.name),
                ..c.clone()
            })
            .collect()
    };
    let mut columns = tagged(left, left_tag);
    columns.extend(tagged(right, right_tag));
    ComparisonTable { columns }
}
