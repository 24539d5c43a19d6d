//! Experiment harness behind the `strata-lab` binary.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{ExperimentConfig, LoadedConfig, Overrides};
pub use run::{run, Check, RunManifest, Subcommand};
