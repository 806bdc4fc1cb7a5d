//! Jointly differentially private thresholded LASSO for sparse linear
//! contextual bandits, with a synthetic simulator and experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
pub mod environment;
pub mod error;
pub mod gram_tree;
pub mod harness;
pub mod policy;
pub mod rng;
pub mod sparse_regression;

pub use dp::{split_budget, BudgetReport, PrivacyBudget, SvtConfig, SvtVariant, WishartParams};
pub use environment::{generate_instance, BanditInstance, ContextDistribution, ContextSet, InstanceParams, RegretLedger};
pub use error::{EnvironmentError, HarnessError, PolicyError, PrivacyError, RegressionError, TreeError};
pub use harness::{run_experiment, AccuracyReport, ExperimentConfig};
pub use gram_tree::{NoisyGramTree, Retention};
pub use policy::{run, baseline_run, PolicyConfig, PolicyKind, SupportEstimate, Trajectory};
pub use sparse_regression::{lasso_fit, LassoFit, LassoOptions, RegressionProblem, RestrictedGram};

pub use nalgebra;
