//! Seeded experiment driver for the `spinfactor` library.
//!
//! One flat [`ExperimentConfig`] describes one run. [`run_experiment`]
//! dispatches to the library and collects per-item rows, structured details
//! and threshold checks into a [`Report`], which renders as JSON or CSV.
//! Reports are reproducible byte for byte apart from the wall-clock field.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{Command, ConfigError, ExperimentConfig, Format, IsometrySpec};
pub use experiment::{run_experiment, ExperimentError};
pub use report::{Check, Report, Row};
