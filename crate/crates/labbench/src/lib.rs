//! Experiment harness for the `navier_slip` solver: configuration files,
//! the experiment drivers, CSV/JSON reports, a content-addressed run
//! registry and the `nslab` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod persistence;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, Result};
pub use report::RunReport;
