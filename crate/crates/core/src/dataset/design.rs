use std::collections::BTreeSet;

use super::{ColumnData, ColumnRole, RawTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Name given to the leading all-ones column.
pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Numeric,
    /// Treatment-coded factor; `levels[0]` is the reference level and
    /// `levels[1..]` map one-to-one onto the term's columns.
    Factor { levels: Vec<String> },
}

/// One source variable and the design columns it generated.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGroup {
    pub name: String,
    pub columns: Vec<usize>,
    pub kind: TermKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSource {
    pub source: String,
    pub level: Option<String>,
}

/// Fully numeric model matrix. Column 0 is always the intercept; every other
/// column belongs to exactly one term group.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: Matrix,
    y: Vec<f64>,
    response: String,
    column_names: Vec<String>,
    terms: Vec<TermGroup>,
    provenance: Vec<ColumnSource>,
    row_ids: Vec<String>,
}

impl DesignMatrix {
    /// Design with an intercept and the given numeric predictors. Row ids
    /// are `1..=n`.
    pub fn from_numeric<S: AsRef<str>>(
        response: &str,
        y: Vec<f64>,
        predictors: &[(S, Vec<f64>)],
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::NoDataRows);
        }
        let mut cols = vec![vec![1.0; n]];
        let mut column_names = vec![INTERCEPT.to_owned()];
        let mut provenance = vec![ColumnSource {
            source: INTERCEPT.to_owned(),
            level: None,
        }];
        let mut terms = Vec::new();
        for (name, values) in predictors {
            let name = name.as_ref();
            if values.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "predictor `{name}` has {} rows, response has {n}",
                    values.len()
                )));
            }
            if column_names.iter().any(|c| c == name) {
                return Err(Error::DuplicateColumn(name.to_owned()));
            }
            terms.push(TermGroup {
                name: name.to_owned(),
                columns: vec![cols.len()],
                kind: TermKind::Numeric,
            });
            column_names.push(name.to_owned());
            provenance.push(ColumnSource {
                source: name.to_owned(),
                level: None,
            });
            cols.push(values.clone());
        }
        Ok(DesignMatrix {
            x: Matrix::from_columns(&cols),
            y,
            response: response.to_owned(),
            column_names,
            terms,
            provenance,
            row_ids: (1..=n).map(|i| i.to_string()).collect(),
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn response_name(&self) -> &str {
        &self.response
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn terms(&self) -> &[TermGroup] {
        &self.terms
    }

    pub fn provenance(&self) -> &[ColumnSource] {
        &self.provenance
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    pub fn term(&self, name: &str) -> Result<&TermGroup> {
        self.terms
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::UnknownTerm(name.to_owned()))
    }

    /// Design columns for the intercept plus the given terms, in term order.
    pub fn columns_for_terms(&self, terms: &[usize]) -> Vec<usize> {
        let set: BTreeSet<usize> = terms.iter().copied().collect();
        let mut cols = vec![0];
        for t in set {
            cols.extend_from_slice(&self.terms[t].columns);
        }
        cols
    }

    /// Sub-design keeping the intercept and the given terms (term order is
    /// the original design order regardless of the order of `terms`).
    pub fn select_terms(&self, terms: &[usize]) -> DesignMatrix {
        let set: BTreeSet<usize> = terms.iter().copied().collect();
        let mut cols = vec![0];
        let mut new_terms = Vec::with_capacity(set.len());
        for t in set {
            let g = &self.terms[t];
            let start = cols.len();
            cols.extend_from_slice(&g.columns);
            new_terms.push(TermGroup {
                name: g.name.clone(),
                columns: (start..cols.len()).collect(),
                kind: g.kind.clone(),
            });
        }
        DesignMatrix {
            x: self.x.select_columns(&cols),
            y: self.y.clone(),
            response: self.response.clone(),
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            terms: new_terms,
            provenance: cols.iter().map(|&c| self.provenance[c].clone()).collect(),
            row_ids: self.row_ids.clone(),
        }
    }

    /// Sub-design without the named terms.
    pub fn drop_terms(&self, names: &[&str]) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.terms.len())
            .filter(|&t| !names.contains(&self.terms[t].name.as_str()))
            .collect();
        self.select_terms(&keep)
    }

    /// Sub-design restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            response: self.response.clone(),
            column_names: self.column_names.clone(),
            terms: self.terms.clone(),
            provenance: self.provenance.clone(),
            row_ids: rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }

    /// Same design with a different response vector.
    pub fn with_response(&self, name: &str, y: Vec<f64>) -> Result<DesignMatrix> {
        if y.len() != self.nrows() {
            return Err(Error::InvalidParameter(format!(
                "response has {} rows, design has {}",
                y.len(),
                self.nrows()
            )));
        }
        let mut d = self.clone();
        d.y = y;
        d.response = name.to_owned();
        Ok(d)
    }

    /// Indices of single-column numeric terms.
    pub fn numeric_terms(&self) -> Vec<usize> {
        (0..self.terms.len())
            .filter(|&t| self.terms[t].kind == TermKind::Numeric)
            .collect()
    }

    /// Recovers the original labels of a factor term from its indicator block.
    pub fn decode_factor(&self, term: &str) -> Result<Vec<String>> {
        let g = self.term(term)?;
        let levels = match &g.kind {
            TermKind::Factor { levels } => levels,
            TermKind::Numeric => return Err(Error::NotNumeric(term.to_owned())),
        };
        Ok((0..self.nrows())
            .map(|i| {
                let hit = g.columns.iter().position(|&c| self.x.get(i, c) == 1.0);
                levels[hit.map_or(0, |k| k + 1)].clone()
            })
            .collect())
    }

    /// `response ~ a + b` rendering of the model formula.
    pub fn formula(&self) -> String {
        if self.terms.is_empty() {
            format!("{} ~ 1", self.response)
        } else {
            let names: Vec<&str> = self.terms.iter().map(|t| t.name.as_str()).collect();
            format!("{} ~ {}", self.response, names.join(" + "))
        }
    }
}

/// Treatment-coded design: intercept, numeric predictors verbatim, and `L-1`
/// indicator columns per `L`-level factor (first level is the reference).
pub fn encode_design(table: &RawTable) -> Result<DesignMatrix> {
    let responses: Vec<_> = table
        .columns()
        .iter()
        .filter(|c| c.role == ColumnRole::Response)
        .collect();
    if responses.len() != 1 {
        return Err(Error::ResponseCount(responses.len()));
    }
    let ids: Vec<_> = table
        .columns()
        .iter()
        .filter(|c| c.role == ColumnRole::Id)
        .collect();
    if ids.len() > 1 {
        return Err(Error::IdColumnCount(ids.len()));
    }
    let n = table.nrows();
    if n == 0 {
        return Err(Error::NoDataRows);
    }
    for c in table.columns() {
        if c.role != ColumnRole::Exclude && c.data.missing_count() > 0 {
            return Err(Error::MissingValues(c.name.clone()));
        }
    }

    let response = responses[0];
    let y: Vec<f64> = match &response.data {
        ColumnData::Numeric(v) => v.iter().map(|x| x.unwrap()).collect(),
        _ => unreachable!("response stored as numeric"),
    };
    let row_ids = match ids.first() {
        Some(c) => (0..n).map(|i| c.data.render(i).unwrap()).collect(),
        None => (1..=n).map(|i| i.to_string()).collect(),
    };

    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut column_names = vec![INTERCEPT.to_owned()];
    let mut provenance = vec![ColumnSource {
        source: INTERCEPT.to_owned(),
        level: None,
    }];
    let mut terms = Vec::new();

    for c in table.columns().iter().filter(|c| c.role.is_predictor()) {
        match &c.data {
            ColumnData::Numeric(v) => {
                terms.push(TermGroup {
                    name: c.name.clone(),
                    columns: vec![cols.len()],
                    kind: TermKind::Numeric,
                });
                column_names.push(c.name.clone());
                provenance.push(ColumnSource {
                    source: c.name.clone(),
                    level: None,
                });
                cols.push(v.iter().map(|x| x.unwrap()).collect());
            }
            ColumnData::Factor(f) => {
                let levels = f.levels();
                if levels.len() < 2 {
                    return Err(Error::SingleLevelFactor(c.name.clone()));
                }
                let start = cols.len();
                for (k, level) in levels.iter().enumerate().skip(1) {
                    column_names.push(format!("{}{}", c.name, level));
                    provenance.push(ColumnSource {
                        source: c.name.clone(),
                        level: Some(level.clone()),
                    });
                    cols.push(
                        f.codes()
                            .iter()
                            .map(|code| if code.unwrap() as usize == k { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
                terms.push(TermGroup {
                    name: c.name.clone(),
                    columns: (start..cols.len()).collect(),
                    kind: TermKind::Factor {
                        levels: levels.to_vec(),
                    },
                });
            }
            ColumnData::Text(_) => unreachable!("predictors are numeric or factor"),
        }
    }
    if terms.is_empty() {
        return Err(Error::NoPredictors);
    }
    let mut seen = BTreeSet::new();
    for name in &column_names {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }

    Ok(DesignMatrix {
        x: Matrix::from_columns(&cols),
        y,
        response: response.name.clone(),
        column_names,
        terms,
        provenance,
        row_ids,
    })
}
