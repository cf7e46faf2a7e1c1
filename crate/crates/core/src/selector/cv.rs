use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rules::*;
use super::{PerformanceMatrix, PredictionMatrix};
use crate::bench::PRECISION_FLOOR;
use crate::ela::FeatureVector;
use crate::error::{Error, Result};
use crate::forest::{fit, rmse, ForestParams, TargetScale};
use crate::stats::median_in_place;
use crate::{seed, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub k: usize,
    pub replications: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { k: 4, replications: 3 }
    }
}

/// Fold of every instance id: sorted distinct ids, assigned round-robin.
pub fn fold_assignment(ids: &[u32], k: usize) -> Result<Vec<(u32, usize)>> {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::validation("cross-validation needs at least 2 instance ids"));
    }
    if k < 2 || k > ids.len() {
        return Err(Error::validation(format!("k = {k} folds needs between 2 and {} instance ids", ids.len())));
    }
    Ok(ids.into_iter().enumerate().map(|(pos, id)| (id, pos % k)).collect())
}

/// One test prediction from one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CvRow<T> {
    pub fold: usize,
    pub rep: usize,
    pub fid: u32,
    pub iid: u32,
    pub algo_id: String,
    pub pred_unscaled: T,
    pub pred_log10: T,
    pub true_precision: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CvOutcome<T> {
    /// Median over replications.
    pub predictions: PredictionMatrix<T>,
    pub rows: Vec<CvRow<T>>,
}

/// Feature rows in `perf.instances` order; all vectors must share names.
fn design<T: Real>(features: &[FeatureVector<T>], perf: &PerformanceMatrix<T>) -> Result<(Vec<Vec<T>>, Vec<String>)> {
    let names = features.first().map(|f| f.names.clone()).unwrap_or_default();
    if let Some(f) = features.iter().find(|f| f.names != names) {
        return Err(Error::validation(format!("features of {} use a different column set", f.problem)));
    }
    let mut rows = Vec::with_capacity(perf.n_instances());
    for id in &perf.instances {
        let f = features
            .iter()
            .find(|f| f.problem == *id)
            .ok_or_else(|| Error::validation(format!("no features for (fid {}, iid {})", id.fid, id.iid)))?;
        rows.push(f.values.clone());
    }
    if let Some(f) = features.iter().find(|f| !perf.instances.contains(&f.problem)) {
        return Err(Error::validation(format!(
            "no performance data for (fid {}, iid {})",
            f.problem.fid, f.problem.iid
        )));
    }
    Ok((rows, names))
}

/// Leave-instance-out cross-validation of unscaled and log10 forests for
/// every algorithm, with predictions aggregated by median over replications.
pub fn run_cv<T: Real>(
    features: &[FeatureVector<T>],
    perf: &PerformanceMatrix<T>,
    cv: &CvConfig,
    params: &ForestParams,
    seed: u64,
) -> Result<CvOutcome<T>> {
    if cv.replications == 0 {
        return Err(Error::validation("replications must be >= 1"));
    }
    let (x, names) = design(features, perf)?;
    let folds = fold_assignment(&perf.instance_ids(), cv.k)?;
    let fold_of: Vec<usize> = perf
        .instances
        .iter()
        .map(|p| folds.iter().find(|(id, _)| *id == p.iid).expect("every id has a fold").1)
        .collect();

    let cells: Vec<(usize, usize, usize)> = (0..perf.n_algos())
        .flat_map(|a| (0..cv.k).flat_map(move |f| (0..cv.replications).map(move |r| (a, f, r))))
        .collect();
    // Each cell yields (instance, unscaled, log) for its test instances.
    let results = cells
        .par_iter()
        .map(|&(a, fold, rep)| {
            let train: Vec<usize> = (0..perf.n_instances()).filter(|&i| fold_of[i] != fold).collect();
            let test: Vec<usize> = (0..perf.n_instances()).filter(|&i| fold_of[i] == fold).collect();
            let tx: Vec<Vec<T>> = train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<T> = train.iter().map(|&i| perf.precision[i][a]).collect();
            let ty_log: Vec<T> = ty.iter().map(|&v| TargetScale::Log10.apply(v)).collect();
            let key = [a as u64, fold as u64, rep as u64];
            let unscaled = fit(&tx, &ty, &names, params, TargetScale::Unscaled, seed::derive_labeled(seed, "cv-unscaled", &key))?;
            let log = fit(&tx, &ty_log, &names, params, TargetScale::Log10, seed::derive_labeled(seed, "cv-log", &key))?;
            test.iter()
                .map(|&i| Ok((i, unscaled.predict(&x[i])?, log.predict(&x[i])?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let (ni, na) = (perf.n_instances(), perf.n_algos());
    let mut reps_u = vec![vec![Vec::with_capacity(cv.replications); na]; ni];
    let mut reps_l = reps_u.clone();
    let mut rows = Vec::with_capacity(cells.len() * ni / cv.k);
    for (&(a, fold, rep), preds) in cells.iter().zip(results) {
        for (i, u, l) in preds {
            reps_u[i][a].push(u);
            reps_l[i][a].push(l);
            let id = perf.instances[i];
            rows.push(CvRow {
                fold,
                rep,
                fid: id.fid,
                iid: id.iid,
                algo_id: perf.algos[a].clone(),
                pred_unscaled: u,
                pred_log10: l,
                true_precision: perf.precision[i][a],
            });
        }
    }
    let med = |m: Vec<Vec<Vec<T>>>| -> Vec<Vec<T>> {
        m.into_iter().map(|row| row.into_iter().map(|mut v| median_in_place(&mut v)).collect()).collect()
    };
    let predictions =
        PredictionMatrix::new(perf.instances.clone(), perf.algos.clone(), med(reps_u), med(reps_l), fold_of)?;
    Ok(CvOutcome { predictions, rows })
}

/// Accuracy of one algorithm's two regression models on test instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelAccuracy<T> {
    pub algo_id: String,
    pub unscaled_rmse: T,
    pub unscaled_log_rmse: T,
    pub log_rmse: T,
    pub log_log_rmse: T,
}

/// RMSE and log-RMSE of both models against the true precisions. Unscaled
/// predictions are floored at the precision floor before taking logs.
pub fn model_accuracy<T: Real>(pred: &PredictionMatrix<T>, perf: &PerformanceMatrix<T>) -> Result<Vec<ModelAccuracy<T>>> {
    pred.check_aligned(perf)?;
    let floor = T::of(PRECISION_FLOOR);
    let ten = T::of(10.0);
    (0..perf.n_algos())
        .map(|a| {
            let truth: Vec<T> = perf.precision.iter().map(|r| r[a]).collect();
            let truth_log: Vec<T> = truth.iter().map(|v| v.log10()).collect();
            let u: Vec<T> = pred.pred_unscaled.iter().map(|r| r[a]).collect();
            let u_log: Vec<T> = u.iter().map(|v| v.max(floor).log10()).collect();
            let l_log: Vec<T> = pred.pred_log.iter().map(|r| r[a]).collect();
            let l: Vec<T> = l_log.iter().map(|&v| ten.powf(v)).collect();
            Ok(ModelAccuracy {
                algo_id: perf.algos[a].clone(),
                unscaled_rmse: rmse(&u, &truth)?,
                unscaled_log_rmse: rmse(&u_log, &truth_log)?,
                log_rmse: rmse(&l, &truth)?,
                log_log_rmse: rmse(&l_log, &truth_log)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InstanceChoice<T> {
    pub fid: u32,
    pub iid: u32,
    pub chosen_algo: String,
    pub chosen_precision: T,
    pub vbs_algo: String,
    pub vbs_precision: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SelectorReport<T> {
    pub name: String,
    pub rmse: T,
    pub log_rmse: T,
    pub threshold: Option<T>,
    pub per_instance: Vec<InstanceChoice<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Baseline<T> {
    pub algo_id: String,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EvalReport<T> {
    /// `vbs`, `unscaled`, `log`, `combined_rmse`, `combined_log_rmse`,
    /// `vbs_of_two`, `sbs_rmse`, `sbs_log_rmse`.
    pub selectors: Vec<SelectorReport<T>>,
    pub sbs_rmse: Baseline<T>,
    pub sbs_log_rmse: Baseline<T>,
    pub models: Vec<ModelAccuracy<T>>,
    pub threshold_table: Vec<ThresholdRow<T>>,
    pub tuned: Vec<TunedThreshold<T>>,
    /// Thresholds are tuned on the same predictions they are reported on.
    pub threshold_tuning: String,
}

impl<T: Real> EvalReport<T> {
    pub fn selector(&self, name: &str) -> Option<&SelectorReport<T>> {
        self.selectors.iter().find(|s| s.name == name)
    }
}

fn describe<T: Real>(
    name: &str,
    choices: &[usize],
    perf: &PerformanceMatrix<T>,
    threshold: Option<T>,
) -> Result<SelectorReport<T>> {
    let best = vbs(perf);
    Ok(SelectorReport {
        name: name.to_string(),
        rmse: selector_metric(choices, perf, Metric::Rmse)?,
        log_rmse: selector_metric(choices, perf, Metric::LogRmse)?,
        threshold,
        per_instance: choices
            .iter()
            .enumerate()
            .map(|(i, &a)| InstanceChoice {
                fid: perf.instances[i].fid,
                iid: perf.instances[i].iid,
                chosen_algo: perf.algos[a].clone(),
                chosen_precision: perf.precision[i][a],
                vbs_algo: perf.algos[best[i].0].clone(),
                vbs_precision: best[i].1,
            })
            .collect(),
    })
}

/// Evaluates every selector and baseline on cross-validated predictions.
pub fn evaluate<T: Real>(pred: &PredictionMatrix<T>, perf: &PerformanceMatrix<T>, grid: &[T]) -> Result<EvalReport<T>> {
    pred.check_aligned(perf)?;
    let n = perf.n_instances();
    let tuned_rmse = tune_threshold(pred, perf, grid, Metric::Rmse)?;
    let tuned_log = tune_threshold(pred, perf, grid, Metric::LogRmse)?;
    let (sbs_r, sbs_r_val) = sbs(perf, Metric::Rmse);
    let (sbs_l, sbs_l_val) = sbs(perf, Metric::LogRmse);
    let vbs_choices: Vec<usize> = vbs(perf).into_iter().map(|(a, _)| a).collect();
    let selectors = vec![
        describe("vbs", &vbs_choices, perf, None)?,
        describe("unscaled", &unscaled_choices(pred), perf, None)?,
        describe("log", &log_choices(pred), perf, None)?,
        describe("combined_rmse", &combined_choices(pred, tuned_rmse.threshold), perf, Some(tuned_rmse.threshold))?,
        describe("combined_log_rmse", &combined_choices(pred, tuned_log.threshold), perf, Some(tuned_log.threshold))?,
        describe("vbs_of_two", &vbs_of_two(pred, perf)?, perf, None)?,
        describe("sbs_rmse", &vec![sbs_r; n], perf, None)?,
        describe("sbs_log_rmse", &vec![sbs_l; n], perf, None)?,
    ];
    Ok(EvalReport {
        selectors,
        sbs_rmse: Baseline { algo_id: perf.algos[sbs_r].clone(), value: sbs_r_val },
        sbs_log_rmse: Baseline { algo_id: perf.algos[sbs_l].clone(), value: sbs_l_val },
        models: model_accuracy(pred, perf)?,
        threshold_table: threshold_table(pred, perf, grid)?,
        tuned: vec![tuned_rmse, tuned_log],
        threshold_tuning: "in-sample".to_string(),
    })
}
