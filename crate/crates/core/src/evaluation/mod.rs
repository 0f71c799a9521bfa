//! ROC analysis and experiment orchestration.

pub mod experiment;
pub mod roc;

pub use experiment::{
    run_experiment, run_experiment_to_dir, run_experiment_with_log, DetectorScores, ExperimentReport, FloorStats,
    Histogram, HISTOGRAM_BINS,
};
pub use roc::{auc_mann_whitney, roc_curve, trapezoid, RocCurve, RocPoint};
