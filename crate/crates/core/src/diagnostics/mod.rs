//! Influence and collinearity diagnostics.

mod added_variable;
mod influence;
mod vif;

pub use added_variable::{added_variable_data, AddedVariable};
pub use influence::{
    cooks_distance, dffits, influence_flags, press_residuals, studentized, InfluenceReport,
    StudentizedKind,
};
pub use vif::{vif, vif_prune, VifEntry, VifRemoval, VifReport};
