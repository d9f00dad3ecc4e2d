//! Typed tabular data: ingestion, missing-data policies, factor coercion,
//! id joins and treatment-coded design matrices.

mod design;
mod io;
mod schema;
mod transform;

use std::collections::BTreeSet;
use std::fmt;

pub use design::{encode_design, ColumnSource, DesignMatrix, TermGroup, TermKind, INTERCEPT};
pub use io::{load_table, load_table_with, write_schema, write_table, LoadOptions};
pub use schema::{Schema, SchemaEntry};
pub use transform::{
    coerce_to_factor, drop_incomplete_rows, drop_sparse_columns, merge_by_id, FactorCoercion,
    DEFAULT_MAX_LEVELS,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnRole {
    Id,
    Numeric,
    Factor,
    Response,
    Exclude,
}

impl ColumnRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnRole::Id => "id",
            ColumnRole::Numeric => "numeric",
            ColumnRole::Factor => "factor",
            ColumnRole::Response => "response",
            ColumnRole::Exclude => "exclude",
        }
    }

    pub fn is_predictor(self) -> bool {
        matches!(self, ColumnRole::Numeric | ColumnRole::Factor)
    }
}

impl std::str::FromStr for ColumnRole {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "id" => Ok(ColumnRole::Id),
            "numeric" => Ok(ColumnRole::Numeric),
            "factor" => Ok(ColumnRole::Factor),
            "response" => Ok(ColumnRole::Response),
            "exclude" => Ok(ColumnRole::Exclude),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Categorical column. `levels` is always the sorted set of labels that
/// actually occur; `codes` index into it.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorColumn {
    levels: Vec<String>,
    codes: Vec<Option<u32>>,
}

impl FactorColumn {
    pub fn from_labels<S: AsRef<str>>(labels: &[Option<S>]) -> Self {
        let set: BTreeSet<&str> = labels.iter().flatten().map(|s| s.as_ref()).collect();
        let levels: Vec<String> = set.into_iter().map(str::to_owned).collect();
        let codes = labels
            .iter()
            .map(|l| {
                l.as_ref()
                    .map(|s| levels.binary_search_by(|x| x.as_str().cmp(s.as_ref())).unwrap() as u32)
            })
            .collect();
        FactorColumn { levels, codes }
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn codes(&self) -> &[Option<u32>] {
        &self.codes
    }

    pub fn label(&self, row: usize) -> Option<&str> {
        self.codes[row].map(|c| self.levels[c as usize].as_str())
    }

    fn take_rows(&self, rows: &[usize]) -> FactorColumn {
        let labels: Vec<Option<&str>> = rows.iter().map(|&i| self.label(i)).collect();
        FactorColumn::from_labels(&labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Text(Vec<Option<String>>),
    Numeric(Vec<Option<f64>>),
    Factor(FactorColumn),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Text(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Factor(f) => f.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Text(v) => v[row].is_none(),
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Factor(f) => f.codes[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    /// Cell rendered for output; `None` when missing.
    pub fn render(&self, row: usize) -> Option<String> {
        match self {
            ColumnData::Text(v) => v[row].clone(),
            ColumnData::Numeric(v) => v[row].map(|x| x.to_string()),
            ColumnData::Factor(f) => f.label(row).map(str::to_owned),
        }
    }

    fn take_rows(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Text(v) => ColumnData::Text(rows.iter().map(|&i| v[i].clone()).collect()),
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Factor(f) => ColumnData::Factor(f.take_rows(rows)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Numeric,
            data: ColumnData::Numeric(values),
        }
    }

    pub fn response(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Response,
            data: ColumnData::Numeric(values),
        }
    }

    pub fn factor<S: AsRef<str>>(name: impl Into<String>, labels: &[Option<S>]) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Factor,
            data: ColumnData::Factor(FactorColumn::from_labels(labels)),
        }
    }

    pub fn id<S: ToString>(name: impl Into<String>, ids: &[S]) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Id,
            data: ColumnData::Text(ids.iter().map(|s| Some(s.to_string())).collect()),
        }
    }

    pub fn exclude(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Column {
            name: name.into(),
            role: ColumnRole::Exclude,
            data: ColumnData::Text(values),
        }
    }
}

/// Record of what a data-preparation step removed or changed.
#[derive(Debug, Clone, PartialEq)]
pub enum AuditEvent {
    DroppedColumn {
        name: String,
        missing: usize,
        rows: usize,
    },
    DroppedRows {
        count: usize,
    },
    UnmatchedIds {
        left_only: Vec<String>,
        right_only: Vec<String>,
    },
    CoercedToFactor {
        column: String,
        levels: Vec<String>,
    },
}

impl fmt::Display for AuditEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditEvent::DroppedColumn {
                name,
                missing,
                rows,
            } => write!(f, "dropped column\t{name}\tmissing {missing} of {rows}"),
            AuditEvent::DroppedRows { count } => write!(f, "dropped rows\t{count}"),
            AuditEvent::UnmatchedIds {
                left_only,
                right_only,
            } => write!(
                f,
                "unmatched ids\tleft only [{}]\tright only [{}]",
                left_only.join(","),
                right_only.join(",")
            ),
            AuditEvent::CoercedToFactor { column, levels } => {
                write!(f, "coerced to factor\t{column}\tlevels [{}]", levels.join(","))
            }
        }
    }
}

/// Columnar table with explicit missingness. Immutable once built; every
/// transform returns a new table and carries the audit trail forward.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    nrows: usize,
    audit: Vec<AuditEvent>,
}

impl RawTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let nrows = columns.first().map_or(0, |c| c.data.len());
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.data.len() != nrows {
                return Err(Error::InvalidParameter(format!(
                    "column `{}` has {} rows, expected {nrows}",
                    c.name,
                    c.data.len()
                )));
            }
            let consistent = matches!(
                (c.role, &c.data),
                (ColumnRole::Id | ColumnRole::Exclude, ColumnData::Text(_))
                    | (ColumnRole::Numeric | ColumnRole::Response, ColumnData::Numeric(_))
                    | (ColumnRole::Factor, ColumnData::Factor(_))
            );
            if !consistent {
                return Err(Error::InvalidParameter(format!(
                    "column `{}` storage does not match role {}",
                    c.name, c.role
                )));
            }
        }
        Ok(RawTable {
            columns,
            nrows,
            audit: Vec::new(),
        })
    }

    pub(crate) fn from_parts(columns: Vec<Column>, nrows: usize, audit: Vec<AuditEvent>) -> Self {
        RawTable {
            columns,
            nrows,
            audit,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn audit(&self) -> &[AuditEvent] {
        &self.audit
    }

    pub fn predictor_count(&self) -> usize {
        self.columns.iter().filter(|c| c.role.is_predictor()).count()
    }

    pub fn id_column(&self) -> Result<&Column> {
        let ids: Vec<&Column> = self.columns.iter().filter(|c| c.role == ColumnRole::Id).collect();
        match ids.as_slice() {
            [one] => Ok(one),
            other => Err(Error::IdColumnCount(other.len())),
        }
    }

    /// Keeps the given rows in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> RawTable {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                role: c.role,
                data: c.data.take_rows(rows),
            })
            .collect();
        RawTable::from_parts(columns, rows.len(), self.audit.clone())
    }

    /// Copy of the table with `event` appended to the audit trail.
    pub fn with_event(mut self, event: AuditEvent) -> RawTable {
        self.audit.push(event);
        self
    }

    /// Returns a copy without the audit trail.
    pub fn without_audit(mut self) -> RawTable {
        self.audit.clear();
        self
    }

    /// Copy of the table restricted to id, response and predictor columns.
    pub fn without_excluded(&self) -> RawTable {
        let columns = self
            .columns
            .iter()
            .filter(|c| c.role != ColumnRole::Exclude)
            .cloned()
            .collect();
        RawTable::from_parts(columns, self.nrows, self.audit.clone())
    }
}
