//! Batch pipeline wrapping `regsel-core`: data preparation, VIF pruning,
//! stepwise selection, diagnostics, cross-validation and a hashed report.

pub mod config;
pub mod pipeline;
pub mod plotdata;
pub mod synth;
