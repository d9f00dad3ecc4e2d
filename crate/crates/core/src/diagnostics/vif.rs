//! Variance inflation factors and the iterative max-VIF elimination loop.

use crate::dataset::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix, PivotedQr, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct VifEntry {
    pub name: String,
    /// Design column index.
    pub column: usize,
    /// `f64::INFINITY` when the column is an exact linear combination of the
    /// other regressors.
    pub vif: f64,
}

impl VifEntry {
    pub fn is_collinear(&self) -> bool {
        self.vif.is_infinite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VifRemoval {
    pub name: String,
    pub vif: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VifReport {
    pub values: Vec<VifEntry>,
    /// Variables removed by [`vif_prune`], in removal order.
    pub trail: Vec<VifRemoval>,
    pub threshold: Option<f64>,
}

impl VifReport {
    pub fn max(&self) -> Option<&VifEntry> {
        self.values
            .iter()
            .fold(None, |best: Option<&VifEntry>, e| match best {
                Some(b) if b.vif >= e.vif => Some(b),
                _ => Some(e),
            })
    }
}

fn centered(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// VIF of each column in `cols` against the intercept and the remaining
/// columns in `cols`.
///
/// With a full-rank centred block `C`, `VIF_j = ||c_j||^2 [(C'C)^{-1}]_jj`,
/// read off the pivoted QR factor. Rank-deficient blocks fall back to one
/// auxiliary regression per column so exactly collinear columns can be told
/// apart from the rest.
pub(crate) fn vif_values(x: &Matrix, cols: &[usize]) -> Vec<f64> {
    let k = cols.len();
    let raw_norms: Vec<f64> = cols.iter().map(|&j| norm2(x.column(j))).collect();
    let centred: Vec<Vec<f64>> = cols.iter().map(|&j| centered(x.column(j))).collect();
    let sq_norms: Vec<f64> = centred.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    // a column with (numerically) no spread is collinear with the intercept
    let degenerate: Vec<bool> = sq_norms
        .iter()
        .zip(&raw_norms)
        .map(|(&s, &r)| s.sqrt() <= DEFAULT_RANK_TOL * r || s == 0.0)
        .collect();

    if k == 1 {
        return vec![if degenerate[0] { f64::INFINITY } else { 1.0 }];
    }

    if !degenerate.iter().any(|&d| d) {
        let qr = PivotedQr::new(Matrix::from_columns(&centred));
        if qr.rank() == k {
            return qr
                .unscaled_covariance_diagonal()
                .iter()
                .zip(&sq_norms)
                .map(|(d, s)| d.expect("full rank") * s)
                .collect();
        }
    }

    (0..k)
        .map(|j| {
            if degenerate[j] {
                return f64::INFINITY;
            }
            let others: Vec<&Vec<f64>> = (0..k)
                .filter(|&i| i != j && !degenerate[i])
                .map(|i| &centred[i])
                .collect();
            if others.is_empty() {
                return 1.0;
            }
            let qr = PivotedQr::new(Matrix::from_columns(&others));
            let rss = qr.solve(&centred[j]).rss;
            if rss <= DEFAULT_RANK_TOL * DEFAULT_RANK_TOL * sq_norms[j] {
                f64::INFINITY
            } else {
                sq_norms[j] / rss
            }
        })
        .collect()
}

fn candidate_columns(design: &DesignMatrix, numeric_only: bool) -> Vec<(String, usize)> {
    if numeric_only {
        design
            .numeric_terms()
            .into_iter()
            .map(|t| {
                let g = &design.terms()[t];
                (g.name.clone(), g.columns[0])
            })
            .collect()
    } else {
        (1..design.ncols())
            .map(|j| (design.column_names()[j].clone(), j))
            .collect()
    }
}

/// Per-column VIFs. With `numeric_only`, factor indicator columns are left
/// out of both the reported set and the auxiliary regressions.
pub fn vif(design: &DesignMatrix, numeric_only: bool) -> Result<VifReport> {
    let cands = candidate_columns(design, numeric_only);
    if cands.len() < 2 {
        return Err(Error::InsufficientData {
            what: "variance inflation factors",
            required: 2,
            available: cands.len(),
        });
    }
    let cols: Vec<usize> = cands.iter().map(|c| c.1).collect();
    let values = vif_values(design.x(), &cols);
    Ok(VifReport {
        values: cands
            .into_iter()
            .zip(values)
            .map(|((name, column), vif)| VifEntry { name, column, vif })
            .collect(),
        trail: Vec::new(),
        threshold: None,
    })
}

/// Repeatedly removes the numeric predictor with the largest VIF (earliest
/// column on ties) while that VIF exceeds `vstar`. Factor terms are passed
/// through untouched.
pub fn vif_prune(design: &DesignMatrix, vstar: f64) -> Result<(DesignMatrix, VifReport)> {
    if !(vstar > 1.0) {
        return Err(Error::InvalidParameter(format!("vstar = {vstar} must exceed 1")));
    }
    let mut survivors = candidate_columns(design, true);
    if survivors.is_empty() {
        return Err(Error::InsufficientData {
            what: "VIF pruning",
            required: 1,
            available: 0,
        });
    }
    let mut trail = Vec::new();
    let values = loop {
        let cols: Vec<usize> = survivors.iter().map(|c| c.1).collect();
        let values = vif_values(design.x(), &cols);
        let mut imax = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[imax] {
                imax = i;
            }
        }
        if values[imax] > vstar {
            if survivors.len() == 1 {
                return Err(Error::PruneExhausted);
            }
            let (name, _) = survivors.remove(imax);
            log::debug!("vif prune: removing {name} (VIF {})", values[imax]);
            trail.push(VifRemoval {
                name,
                vif: values[imax],
            });
        } else {
            break values;
        }
    };
    let removed: Vec<&str> = trail.iter().map(|r| r.name.as_str()).collect();
    let pruned = design.drop_terms(&removed);
    let report = VifReport {
        values: survivors
            .into_iter()
            .zip(values)
            .map(|((name, _), vif)| {
                let column = pruned.term(&name).map(|g| g.columns[0]).unwrap_or(0);
                VifEntry { name, column, vif }
            })
            .collect(),
        trail,
        threshold: Some(vstar),
    };
    Ok((pruned, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: Vec<(&str, Vec<f64>)>) -> DesignMatrix {
        let n = cols[0].1.len();
        let y: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        DesignMatrix::from_numeric("y", y, &cols).unwrap()
    }

    #[test]
    fn orthogonal_centred_columns_have_unit_vif() {
        let d = design(vec![
            ("a", vec![1.0, -1.0, 1.0, -1.0]),
            ("b", vec![1.0, 1.0, -1.0, -1.0]),
            ("c", vec![1.0, -1.0, -1.0, 1.0]),
        ]);
        let r = vif(&d, true).unwrap();
        for e in &r.values {
            assert!((e.vif - 1.0).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn exact_multiple_is_flagged_infinite() {
        let x1 = vec![0.3, 1.2, -0.7, 2.2, 0.9, -1.5];
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let x3 = vec![1.0, 0.0, 0.5, -0.2, 0.1, 0.4];
        let r = vif(&design(vec![("x1", x1), ("x2", x2), ("x3", x3)]), true).unwrap();
        assert!(r.values[0].is_collinear());
        assert!(r.values[1].is_collinear());
        assert!(r.values[2].vif.is_finite());
    }

    #[test]
    fn constant_column_is_collinear_with_intercept() {
        let r = vif(
            &design(vec![("k", vec![3.0; 5]), ("x", vec![1.0, 2.0, 0.0, 5.0, 4.0])]),
            true,
        )
        .unwrap();
        assert!(r.values[0].is_collinear());
    }

    #[test]
    fn prune_is_identity_when_all_small() {
        let d = design(vec![
            ("a", vec![1.0, -1.0, 1.0, -1.0]),
            ("b", vec![1.0, 1.0, -1.0, -1.0]),
        ]);
        let (p, r) = vif_prune(&d, 10.0).unwrap();
        assert_eq!(p, d);
        assert!(r.trail.is_empty());
    }

    #[test]
    fn prune_removes_first_of_exact_pair() {
        let x1 = vec![0.3, 1.2, -0.7, 2.2, 0.9, -1.5];
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let x3 = vec![1.0, 0.0, 0.5, -0.2, 0.1, 0.4];
        let (p, r) = vif_prune(&design(vec![("x1", x1), ("x2", x2), ("x3", x3)]), 10.0).unwrap();
        assert_eq!(r.trail.len(), 1);
        assert_eq!(r.trail[0].name, "x1");
        assert!(r.trail[0].vif.is_infinite());
        let names: Vec<&str> = p.terms().iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["x2", "x3"]);
        assert!(r.values.iter().all(|e| e.vif <= 10.0));
    }

    #[test]
    fn prune_parameter_guards() {
        let d = design(vec![("a", vec![1.0, 2.0, 3.0])]);
        assert!(vif_prune(&d, 1.0).is_err());
        assert!(vif(&d, true).is_err());
        let k = design(vec![("k", vec![2.0; 3])]);
        assert!(matches!(vif_prune(&k, 10.0), Err(Error::PruneExhausted)));
    }
}
