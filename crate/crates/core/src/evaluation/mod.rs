//! Loss-time curves, mean interval loss and the leave-one-out experiment.

mod curve;
mod experiment;

pub use curve::{
    aggregate_curves, build_loss_time_curve, mean_interval_loss, Breakpoint, LossTimeCurve,
    MilConfig, TimeScale,
};
pub use experiment::{
    derive_seed, loo_experiment, run_loo, write_curves_csv, EmptyCell, ExperimentConfig, FoldCurve,
    LooOutcome, Method, MilCell, MilReport,
};
