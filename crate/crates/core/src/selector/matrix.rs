use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bench::ProblemId;
use crate::error::{Error, Result};
use crate::modcma::PerformanceRecord;
use crate::Real;

/// True precisions, one row per instance and one column per algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PerformanceMatrix<T> {
    pub instances: Vec<ProblemId>,
    pub algos: Vec<String>,
    pub precision: Vec<Vec<T>>,
}

impl<T: Real> PerformanceMatrix<T> {
    pub fn new(instances: Vec<ProblemId>, algos: Vec<String>, precision: Vec<Vec<T>>) -> Result<Self> {
        if instances.is_empty() || algos.is_empty() {
            return Err(Error::validation("performance matrix needs at least one instance and one algorithm"));
        }
        if precision.len() != instances.len() || precision.iter().any(|r| r.len() != algos.len()) {
            return Err(Error::validation("performance matrix shape does not match its labels"));
        }
        for (i, row) in precision.iter().enumerate() {
            if let Some(a) = row.iter().position(|p| !(p.is_finite() && *p > T::zero())) {
                return Err(Error::validation(format!(
                    "precision for {} / {} must be finite and positive",
                    instances[i], algos[a]
                )));
            }
        }
        Ok(PerformanceMatrix { instances, algos, precision })
    }

    /// Dense matrix from median records; instances sorted, algorithms in
    /// first-seen order.
    pub fn from_records(records: &[PerformanceRecord<T>]) -> Result<Self> {
        let mut algos: Vec<String> = Vec::new();
        let mut cells: BTreeMap<ProblemId, BTreeMap<usize, T>> = BTreeMap::new();
        for r in records {
            let a = match algos.iter().position(|x| *x == r.algo_id) {
                Some(a) => a,
                None => {
                    algos.push(r.algo_id.clone());
                    algos.len() - 1
                }
            };
            if cells.entry(r.problem).or_default().insert(a, r.median_precision).is_some() {
                return Err(Error::validation(format!("duplicate record for {} / {}", r.problem, r.algo_id)));
            }
        }
        let mut precision = Vec::with_capacity(cells.len());
        for (id, row) in &cells {
            if row.len() != algos.len() {
                let missing: Vec<&str> =
                    (0..algos.len()).filter(|a| !row.contains_key(a)).map(|a| algos[a].as_str()).collect();
                return Err(Error::validation(format!("{id} has no record for {}", missing.join(", "))));
            }
            precision.push(row.values().copied().collect());
        }
        Self::new(cells.into_keys().collect(), algos, precision)
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn n_algos(&self) -> usize {
        self.algos.len()
    }

    /// Distinct instance ids, ascending.
    pub fn instance_ids(&self) -> Vec<u32> {
        self.instances.iter().map(|p| p.iid).collect::<BTreeSet<_>>().into_iter().collect()
    }
}

/// Per-instance predictions of both models, aligned with a performance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PredictionMatrix<T> {
    pub instances: Vec<ProblemId>,
    pub algos: Vec<String>,
    pub pred_unscaled: Vec<Vec<T>>,
    /// log10 precision.
    pub pred_log: Vec<Vec<T>>,
    /// Test fold of each instance.
    pub fold: Vec<usize>,
}

impl<T: Real> PredictionMatrix<T> {
    pub fn new(
        instances: Vec<ProblemId>,
        algos: Vec<String>,
        pred_unscaled: Vec<Vec<T>>,
        pred_log: Vec<Vec<T>>,
        fold: Vec<usize>,
    ) -> Result<Self> {
        let shape_ok = |m: &Vec<Vec<T>>| m.len() == instances.len() && m.iter().all(|r| r.len() == algos.len());
        if !shape_ok(&pred_unscaled) || !shape_ok(&pred_log) || fold.len() != instances.len() {
            return Err(Error::validation("prediction matrix shape does not match its labels"));
        }
        if pred_unscaled.iter().chain(&pred_log).flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("predictions must be finite"));
        }
        Ok(PredictionMatrix { instances, algos, pred_unscaled, pred_log, fold })
    }

    pub(crate) fn check_aligned(&self, perf: &PerformanceMatrix<T>) -> Result<()> {
        if self.instances != perf.instances || self.algos != perf.algos {
            return Err(Error::validation("predictions and performance cover different instances or algorithms"));
        }
        Ok(())
    }

    /// `10^(min_a pred_log[i][a])`, the best precision the log model expects.
    pub fn best_log_precision(&self, i: usize) -> T {
        let m = self.pred_log[i].iter().copied().fold(T::infinity(), T::min);
        T::of(10.0).powf(m)
    }
}
