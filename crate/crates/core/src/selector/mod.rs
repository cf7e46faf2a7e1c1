//! Per-instance algorithm selection from regression predictions, with
//! virtual-best and single-best baselines and cross-validated evaluation.

mod cv;
mod matrix;
mod rules;

pub use cv::{
    evaluate, fold_assignment, model_accuracy, run_cv, Baseline, CvConfig, CvOutcome, CvRow, EvalReport,
    InstanceChoice, ModelAccuracy, SelectorReport,
};
pub use matrix::{PerformanceMatrix, PredictionMatrix};
pub use rules::{
    combined_choices, default_threshold_grid, log_choices, sbs, select_combined, select_log, select_unscaled,
    selector_metric, threshold_table, tune_threshold, unscaled_choices, vbs, vbs_of_two, Metric, ThresholdRow,
    TunedThreshold,
};
