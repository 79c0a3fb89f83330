//! Experiment driver for `hschur`: scaling ladders, ordering and
//! preconditioner comparisons, sparsity patterns, eigenvalue spreads and RCS
//! sweeps, all written as CSV.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{BenchError, BenchResult};
