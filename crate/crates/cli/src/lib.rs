//! Experiment driver for tensor-train discriminant analysis: dataset
//! loading, synthetic data, repeated train/test runs, sweeps, and model
//! directories.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod methods;
pub mod model_io;
pub mod synthetic;

pub use config::{ExperimentConfig, LambdaSpec, Method, RankSpec, Source};
pub use error::{CliError, CliResult};
pub use experiment::{run, run_on, sweep, sweep_on, ResultRow, RunOutcome, SweepPoint};
pub use synthetic::{generate_synthetic, SyntheticReport, SyntheticSpec};
