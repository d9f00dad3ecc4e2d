//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("column `{0}` is not listed in the schema and no default role is declared")]
    UnlistedColumn(String),

    #[error("schema names column `{0}`, which is not present in the data")]
    UnknownSchemaColumn(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("table has no data rows")]
    NoDataRows,

    #[error("non-numeric token {token:?} in column `{column}` at data row {row}")]
    InvalidNumber {
        row: usize,
        column: String,
        token: String,
    },

    #[error("missing id value at data row {row}")]
    MissingId { row: usize },

    #[error("ratio {0} is outside [0, 1]")]
    InvalidRatio(f64),

    #[error("no predictors remain")]
    NoPredictors,

    #[error("table has {0} id columns, expected exactly one")]
    IdColumnCount(usize),

    #[error("tables use different id columns (`{left}` vs `{right}`)")]
    IdMismatch { left: String, right: String },

    #[error("duplicate id `{id}` in {table} table")]
    DuplicateId { id: String, table: &'static str },

    #[error("column `{0}` differs between the merged tables")]
    ColumnConflict(String),

    #[error("empty dataset after NA omission")]
    EmptyAfterNaOmission,

    #[error("column `{0}` not found")]
    ColumnNotFound(String),

    #[error("column `{0}` is not a numeric predictor")]
    NotNumeric(String),

    #[error("column `{column}` has {levels} distinct values, more than the allowed {max}")]
    TooManyLevels {
        column: String,
        levels: usize,
        max: usize,
    },

    #[error("factor `{0}` has a single level")]
    SingleLevelFactor(String),

    #[error("table has {0} response columns, expected exactly one")]
    ResponseCount(usize),

    #[error("column `{0}` still contains missing values")]
    MissingValues(String),

    #[error("insufficient data for {what}: need {required}, have {available}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        available: usize,
    },

    #[error("design column `{0}` is identically zero")]
    ZeroColumn(String),

    #[error("AIC undefined: residual sum of squares {rss} is at or below the floor {floor}")]
    AicUndefined { rss: f64, floor: f64 },

    #[error("{what} undefined: n = {n}, rank = {rank}")]
    DegreesOfFreedom {
        what: &'static str,
        n: usize,
        rank: usize,
    },

    #[error("response value {value} at row {row} is not positive")]
    NonPositiveResponse { row: usize, value: f64 },

    #[error("response is already log-transformed")]
    AlreadyLogTransformed,

    #[error("design does not match the model: {0}")]
    TermMismatch(String),

    #[error("row {row} has leverage 1 (exact-fit point)")]
    ExactFitPoint { row: usize },

    #[error("unknown term `{0}`")]
    UnknownTerm(String),

    #[error("term `{term}` spans {columns} columns; a single-column term is required")]
    MultiColumnTerm { term: String, columns: usize },

    #[error("term `{0}` is aliased in the model")]
    AliasedTerm(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vector is empty")]
    EmptyVector,

    #[error("row index {index} out of range for {n} rows")]
    RowOutOfRange { index: usize, n: usize },

    #[error("models were fitted on different row counts ({0} vs {1})")]
    RowCountMismatch(usize, usize),

    #[error("pruning would remove every numeric predictor")]
    PruneExhausted,

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
