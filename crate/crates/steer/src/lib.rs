//! File formats, configuration and the benchmark suite around `steer-core`.
//!
//! The `steer` binary exposes three subcommands:
//!
//! * `run` solves one transfer from a JSON config and writes `report.json`,
//!   `control.csv` and `trajectory.csv`;
//! * `bench` runs the six-transfer suite with all three methods and writes
//!   `benchmark.csv` plus gnuplot data;
//! * `certify` writes the sampled controllability certificates.

pub mod bench;
pub mod config;
pub mod error;
pub mod models;
pub mod report;
pub mod run;

pub use config::{MethodName, RunConfig};
pub use error::CliError;
