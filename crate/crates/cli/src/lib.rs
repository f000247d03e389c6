//! Harness library behind the `remlab` binary: configuration, experiment
//! dispatch, output manifests, and the verification suite.

pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod runner;
pub mod verify;

pub use config::{ExperimentConfig, MethodSel, Task};
pub use error::CliError;
pub use manifest::RunManifest;
pub use runner::run_experiment;
