//! Experiment orchestration: configuration, replicated runs, CSV output,
//! accuracy metrics, empirical privacy probes and SVG regret plots.

pub mod accuracy;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod probe;

pub use accuracy::{accuracy_report, calibrated_alpha, AccuracyReport};
pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ExperimentOutput, OUT_DIR_ENV};
pub use plot::render_plots;
pub use probe::{privacy_probe, Mechanism, ProbeReport};
