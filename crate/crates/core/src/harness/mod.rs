//! Experiment configuration, Monte Carlo estimation and reporting.

pub mod config;
pub mod experiment;
pub mod report;
pub mod selftest;
pub mod stats;

pub use config::{Algorithm, ExperimentConfig};
pub use experiment::{estimate_expected_tau, Experiment, TrialResult, TrialSummary};
pub use report::{report, Format};
pub use selftest::optional_stopping_selftest;
