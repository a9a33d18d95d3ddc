//! Experiment harness: configuration, seeded Monte Carlo cells, reports and
//! acceptance checks.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{CliError, CliResult};
pub use report::{McSummary, Table};
