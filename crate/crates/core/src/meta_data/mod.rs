//! The meta-dataset: per-(dataset, algorithm) test results, CSV ingestion
//! and a seeded synthetic generator.

mod matrix;
mod synthetic;

pub use matrix::{Cell, PerformanceMatrix, RunRecord, CSV_HEADER};
pub use synthetic::{calibrate_noise_scale, generate_synthetic, SyntheticSpec};
