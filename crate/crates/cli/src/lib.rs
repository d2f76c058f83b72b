//! Configuration and experiment plumbing behind the `mortcast` binary.

pub mod config;
pub mod error;
pub mod inspect;
pub mod run;
pub mod synth;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run_experiment, RunSummary};
