//! Monte-Carlo experiment runner around `isabc-core`.

pub mod aggregate;
pub mod clock;
pub mod config_file;
pub mod experiment;
pub mod export;
pub mod trial;

pub use experiment::{run_experiment, ExperimentSpec, HarnessError, SweepVar};
