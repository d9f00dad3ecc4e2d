//! Partial-regression (added-variable) data for a single design column.

use crate::error::{Error, Result};
use crate::linalg::{dot, PivotedQr, DEFAULT_RANK_TOL};
use crate::linmodel::FittedModel;

#[derive(Debug, Clone, PartialEq)]
pub struct AddedVariable {
    /// Residuals of the term's column regressed on every other column.
    pub x_partial: Vec<f64>,
    /// Residuals of the response regressed on every other column.
    pub y_partial: Vec<f64>,
    /// No-intercept slope of `y_partial` on `x_partial`.
    pub slope: f64,
}

pub fn added_variable_data(model: &FittedModel, term: &str) -> Result<AddedVariable> {
    let design = model.design();
    let group = design.term(term)?;
    if group.columns.len() != 1 {
        return Err(Error::MultiColumnTerm {
            term: term.to_owned(),
            columns: group.columns.len(),
        });
    }
    let j = group.columns[0];
    if model.coefficients()[j].is_none() {
        return Err(Error::AliasedTerm(term.to_owned()));
    }
    let others: Vec<usize> = (0..design.ncols()).filter(|&c| c != j).collect();
    let z = design.x().select_columns(&others);
    let qr = PivotedQr::with_tolerance(z, DEFAULT_RANK_TOL);
    let y_partial = qr.residuals_from_qty(&qr.solve(design.y()).qty);
    let xj = design.x().column(j);
    let x_partial = qr.residuals_from_qty(&qr.solve(xj).qty);
    let slope = dot(&x_partial, &y_partial) / dot(&x_partial, &x_partial);
    Ok(AddedVariable {
        x_partial,
        y_partial,
        slope,
    })
}
