//! Experiment driver for `pigd-core`: JSON configs in, trace CSVs and JSON
//! summaries out, with an on-disk cache of reference solutions.

pub mod cache;
pub mod config;
pub mod error;
pub mod experiment;
pub mod ode_run;
pub mod refit;
pub mod sweep;
pub mod traces;

pub use config::{Algorithm, Audit, ExperimentConfig};
pub use error::{LabError, Result};
pub use experiment::{run_experiment, RunOptions, Summary};
