//! Experiment runner for `dirac1d`: configuration, the experiment kinds, and report files.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use experiments::{run_experiment, Kind};
pub use report::{Check, Report};
