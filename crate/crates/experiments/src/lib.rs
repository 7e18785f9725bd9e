//! Batch experiments over the `avgpg` library: convergence sweeps,
//! constant-scaling studies, bound verification and discounted
//! comparisons, written as deterministic CSV datasets.

pub mod config;
pub mod dataset;
pub mod error;
pub mod plot;
pub mod runs;

pub use config::{ExperimentConfig, ExperimentKind};
pub use dataset::Dataset;
pub use error::{ExperimentError, Result};
