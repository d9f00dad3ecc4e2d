//! Linear-model selection toolkit: tabular ingestion, least-squares fitting,
//! influence and collinearity diagnostics, greedy AIC search and Monte Carlo
//! cross-validation.

pub mod crossval;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod linmodel;
pub mod quantile;
pub mod selection;

pub use dataset::{encode_design, DesignMatrix, RawTable};
pub use error::{Error, Result};
pub use linmodel::{fit_ols, FittedModel};
