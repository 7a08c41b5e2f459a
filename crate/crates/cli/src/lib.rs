//! Experiment runner for the directional mixing toolkit: JSON config
//! parsing, verb dispatch into the exact kernels, and deterministic CSV,
//! sidecar, and manifest emission.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

pub use error::CliError;
pub use run::{run_experiment, RunSummary, Verb};
