//! Experiment harness for two-dimensional beam and channel tracking.
//!
//! This crate adds the standard-library layer on top of `beamtrack-core`:
//!
//! * [`config`] — flat TOML experiment files and their validation;
//! * [`experiment`] — seeded, parallel Monte-Carlo runs and metric aggregation;
//! * [`output`] — the CSV metrics format;
//! * [`verify`] — self-checks of the numerical core;
//! * [`cli`] — the `beamtrack` command-line entry point.
//!
//! Every trial draws from its own ChaCha stream derived from the base seed and
//! the trial index, and trials are reduced in index order, so results do not
//! depend on the number of worker threads.
#![deny(unsafe_code)]
#![warn(missing_docs)]

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, MetricsRecord};
pub use output::emit_csv;
