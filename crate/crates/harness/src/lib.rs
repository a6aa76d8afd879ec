//! Experiment driver for TT neighborhood preserving embedding: dataset loading,
//! tau sweeps, convergence traces and report files.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{run_convergence, run_experiment, RunOptions};
