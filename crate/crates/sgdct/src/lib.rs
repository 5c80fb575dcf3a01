//! Configuration, file formats, the parallel replication harness and the
//! experiment runner behind the `sgdct` command line.
//!
//! The numerical work lives in [`sgdct_core`]; this crate wires it to files.

pub mod config;
mod error;
pub mod experiments;
pub mod harness;
pub mod io;
pub mod report;

pub use config::{parse_config, Experiment, ExperimentConfig};
pub use error::{Error, Result};
pub use experiments::run_experiment;
pub use harness::{run_replications, run_trajectories};
pub use report::{ExperimentReport, Verdict};
