use serde::{Deserialize, Serialize};

use super::{PerformanceMatrix, PredictionMatrix};
use crate::error::{Error, Result};
use crate::stats::argmin;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    LogRmse,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Rmse, Metric::LogRmse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::LogRmse => "log_rmse",
        }
    }

    fn value<T: Real>(self, p: T) -> T {
        match self {
            Metric::Rmse => p,
            Metric::LogRmse => p.log10(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "log_rmse" | "log-rmse" => Ok(Metric::LogRmse),
            _ => Err(Error::argument(format!("unknown metric {s:?} (expected rmse or log_rmse)"))),
        }
    }
}

fn row_argmin<T: Real>(row: &[T]) -> usize {
    argmin(row).expect("matrix rows are non-empty")
}

/// Best algorithm index and its precision, per instance.
pub fn vbs<T: Real>(perf: &PerformanceMatrix<T>) -> Vec<(usize, T)> {
    perf.precision.iter().map(|row| {
        let a = row_argmin(row);
        (a, row[a])
    }).collect()
}

/// RMSE (or log-RMSE) between the chosen algorithms' precisions and the
/// per-instance best precisions.
pub fn selector_metric<T: Real>(choices: &[usize], perf: &PerformanceMatrix<T>, metric: Metric) -> Result<T> {
    if choices.len() != perf.n_instances() {
        return Err(Error::argument(format!(
            "{} choices for {} instances",
            choices.len(),
            perf.n_instances()
        )));
    }
    if let Some(&a) = choices.iter().find(|&&a| a >= perf.n_algos()) {
        return Err(Error::argument(format!("choice {a} is not an algorithm index")));
    }
    let best = vbs(perf);
    let ss: T = choices
        .iter()
        .zip(&perf.precision)
        .zip(&best)
        .map(|((&a, row), &(_, b))| {
            let e = metric.value(row[a]) - metric.value(b);
            e * e
        })
        .sum();
    Ok((ss / T::of_usize(choices.len())).sqrt())
}

/// The single algorithm whose choices-everywhere metric is smallest.
pub fn sbs<T: Real>(perf: &PerformanceMatrix<T>, metric: Metric) -> (usize, T) {
    let scores: Vec<T> = (0..perf.n_algos())
        .map(|a| selector_metric(&vec![a; perf.n_instances()], perf, metric).expect("valid choices"))
        .collect();
    let a = row_argmin(&scores);
    (a, scores[a])
}

pub fn select_unscaled<T: Real>(pred: &PredictionMatrix<T>, instance: usize) -> usize {
    row_argmin(&pred.pred_unscaled[instance])
}

pub fn select_log<T: Real>(pred: &PredictionMatrix<T>, instance: usize) -> usize {
    row_argmin(&pred.pred_log[instance])
}

/// Log-model choice when its best predicted precision is below `threshold`,
/// unscaled-model choice otherwise.
pub fn select_combined<T: Real>(pred: &PredictionMatrix<T>, instance: usize, threshold: T) -> usize {
    if pred.best_log_precision(instance) < threshold {
        select_log(pred, instance)
    } else {
        select_unscaled(pred, instance)
    }
}

pub fn unscaled_choices<T: Real>(pred: &PredictionMatrix<T>) -> Vec<usize> {
    (0..pred.instances.len()).map(|i| select_unscaled(pred, i)).collect()
}

pub fn log_choices<T: Real>(pred: &PredictionMatrix<T>) -> Vec<usize> {
    (0..pred.instances.len()).map(|i| select_log(pred, i)).collect()
}

pub fn combined_choices<T: Real>(pred: &PredictionMatrix<T>, threshold: T) -> Vec<usize> {
    (0..pred.instances.len()).map(|i| select_combined(pred, i, threshold)).collect()
}

/// Per instance, whichever of the two model choices truly performed better;
/// the unscaled choice wins ties.
pub fn vbs_of_two<T: Real>(pred: &PredictionMatrix<T>, perf: &PerformanceMatrix<T>) -> Result<Vec<usize>> {
    pred.check_aligned(perf)?;
    Ok((0..perf.n_instances())
        .map(|i| {
            let (u, l) = (select_unscaled(pred, i), select_log(pred, i));
            let row = &perf.precision[i];
            if row[l] < row[u] || (row[l] == row[u] && l < u) { l } else { u }
        })
        .collect())
}

/// Grid values from the threshold table plus 200 log-spaced points in `[0.01, 50]`.
pub fn default_threshold_grid() -> Vec<f64> {
    let mut grid = vec![0.01, 0.1, 0.5, 1.0, 2.0, 3.0, 10.0, 20.0, 50.0];
    let (lo, hi) = (0.01f64.log10(), 50f64.log10());
    grid.extend((0..200).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / 199.0)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ThresholdRow<T> {
    pub threshold: T,
    pub rmse: T,
    pub log_rmse: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TunedThreshold<T> {
    pub metric: Metric,
    pub threshold: T,
    pub value: T,
}

/// Both metrics of the combined selector at each threshold of `grid`.
pub fn threshold_table<T: Real>(
    pred: &PredictionMatrix<T>,
    perf: &PerformanceMatrix<T>,
    grid: &[T],
) -> Result<Vec<ThresholdRow<T>>> {
    pred.check_aligned(perf)?;
    grid.iter()
        .map(|&t| {
            let c = combined_choices(pred, t);
            Ok(ThresholdRow {
                threshold: t,
                rmse: selector_metric(&c, perf, Metric::Rmse)?,
                log_rmse: selector_metric(&c, perf, Metric::LogRmse)?,
            })
        })
        .collect()
}

/// Best threshold over `grid` plus the two endpoints that reproduce the pure
/// unscaled and pure log selectors. Ties go to the smaller threshold.
pub fn tune_threshold<T: Real>(
    pred: &PredictionMatrix<T>,
    perf: &PerformanceMatrix<T>,
    grid: &[T],
    metric: Metric,
) -> Result<TunedThreshold<T>> {
    pred.check_aligned(perf)?;
    if grid.is_empty() || grid.iter().any(|t| !(t.is_finite() && *t > T::zero())) {
        return Err(Error::argument("threshold grid must be non-empty, finite and positive"));
    }
    let p: Vec<T> = (0..pred.instances.len()).map(|i| pred.best_log_precision(i)).collect();
    let lo = p.iter().copied().fold(T::infinity(), T::min);
    let hi = p.iter().copied().fold(T::neg_infinity(), T::max);
    let two = T::one() + T::one();
    let mut candidates: Vec<T> = grid.to_vec();
    candidates.extend([lo / two, hi * two]);
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
    candidates.dedup();
    let mut best: Option<TunedThreshold<T>> = None;
    for t in candidates {
        let value = selector_metric(&combined_choices(pred, t), perf, metric)?;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(TunedThreshold { metric, threshold: t, value });
        }
    }
    Ok(best.expect("at least one candidate"))
}
