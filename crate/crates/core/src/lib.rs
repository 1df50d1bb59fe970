//! Average ranking of algorithms from incomplete meta-data.
//!
//! Per-dataset rankings built from a meta-dataset of (accuracy, runtime)
//! results are combined either by the plain average ranking (AR) or by a
//! weighted incremental average (AR-MTA) that discounts rankings with fewer
//! entries. Omission simulators degrade a meta-dataset by whole datasets or
//! by a share of tests per dataset, and a leave-one-out harness scores the
//! resulting orders through loss-time curves and their mean interval loss.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod aggregation;
pub mod error;
pub mod evaluation;
pub mod meta_data;
pub mod omission;
pub mod ranking;
pub mod scalar;

pub use aggregation::{
    aggregate_baseline_ar, aggregate_closed_form, aggregate_incremental, ranking_weight,
    AggregateEntry, IncrementalAggregator,
};
pub use error::{Error, Result};
pub use evaluation::{
    aggregate_curves, build_loss_time_curve, loo_experiment, mean_interval_loss, run_loo,
    Breakpoint, ExperimentConfig, Method, MilConfig, TimeScale,
};
pub use meta_data::{calibrate_noise_scale, generate_synthetic, RunRecord, SyntheticSpec};
pub use omission::{apply_mta, apply_mtd, apply_omission, kept_count, OmissionMode, OmissionSpec};
pub use ranking::{
    characterize, rank_from_performance, rankings_of, spearman, CharacterizationSummary,
};
pub use scalar::Scalar;

pub type PerformanceMatrix = meta_data::PerformanceMatrix<f64>;
pub type Ranking = ranking::Ranking<f64>;
pub type AggregateRanking = aggregation::AggregateRanking<f64>;
pub type Characterization = ranking::Characterization<f64>;
pub type LossTimeCurve = evaluation::LossTimeCurve<f64>;
pub type MilReport = evaluation::MilReport<f64>;

pub type PerformanceMatrixF32 = meta_data::PerformanceMatrix<f32>;
pub type RankingF32 = ranking::Ranking<f32>;
pub type AggregateRankingF32 = aggregation::AggregateRanking<f32>;
pub type LossTimeCurveF32 = evaluation::LossTimeCurve<f32>;
