//! Experiment plumbing for the `pa-harq` binary: sweep configuration, CSV
//! rows and the figure runners.

pub mod config;
pub mod eval;
pub mod row;
pub mod runner;

pub use config::{ConfigError, Figure, Method, Overrides, SweepSpec};
pub use row::{write_csv, ResultRow, COLUMNS};
