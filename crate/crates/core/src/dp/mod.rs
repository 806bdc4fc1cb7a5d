//! Differential-privacy primitives and budget arithmetic.

mod budget;
mod laplace;
mod svt;
mod wishart;

pub use budget::{
    ceil_log2, compose, compose_advanced, split_budget, BudgetReport, Composition, CompositionMethod,
    PrivacyBudget,
};
pub use laplace::Laplace;
pub use svt::{svt_select, SvtConfig, SvtConstants, SvtOutcome, SvtVariant};
pub use wishart::{wishart_noise, WishartParams};
