use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    dispersion, ela_distr, ela_meta, information_content, nearest_better, uniform_sample, IcSettings, SampleSet,
};
use crate::bench::{ProblemId, ProblemInstance};
use crate::error::{Error, Result};
use crate::stats::{mean, median_in_place, sd};
use crate::{seed, Real};

/// Canonical feature order, shared by every feature vector and CSV.
pub const FEATURE_NAMES: [&str; 38] = [
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "disp.ratio_mean_02",
    "disp.ratio_mean_05",
    "disp.ratio_mean_10",
    "disp.ratio_mean_25",
    "disp.ratio_median_02",
    "disp.ratio_median_05",
    "disp.ratio_median_10",
    "disp.ratio_median_25",
    "disp.diff_mean_02",
    "disp.diff_mean_05",
    "disp.diff_mean_10",
    "disp.diff_mean_25",
    "disp.diff_median_02",
    "disp.diff_median_05",
    "disp.diff_median_10",
    "disp.diff_median_25",
    "ic.h.max",
    "ic.eps.s",
    "ic.eps.max",
    "ic.eps.ratio",
    "ic.m0",
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.cor",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
    "basic.y_min",
    "basic.y_max",
    "basic.y_mean",
    "basic.y_sd",
];

/// The nine-feature subset used for the reduced models.
pub const SELECTED_FEATURES: [&str; 9] = [
    "disp.diff_mean_02",
    "ela_distr.skewness",
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.intercept",
    "ela_meta.quad_simple.adj_r2",
    "ic.eps.ratio",
    "ic.eps.s",
    "nbc.nb_fitness.cor",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureVector<T> {
    pub problem: ProblemId,
    pub n_samples: usize,
    pub n_reps: usize,
    pub names: Vec<String>,
    pub values: Vec<T>,
}

impl<T: Real> FeatureVector<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// All features of one sample, in [`FEATURE_NAMES`] order. Non-finite
/// values are replaced by 0.
pub fn sample_features<T: Real>(sample: &SampleSet<T>, ic: &IcSettings<T>) -> Result<Vec<T>> {
    let y = &sample.values;
    let distr = ela_distr(y);
    let meta = ela_meta(sample)?;
    let disp = dispersion(sample)?;
    let icf = information_content(sample, ic)?;
    let nbc = nearest_better(sample)?;
    let y_min = y.iter().copied().fold(T::infinity(), T::min);
    let y_max = y.iter().copied().fold(T::neg_infinity(), T::max);

    let mut v = Vec::with_capacity(FEATURE_NAMES.len());
    v.extend([distr.skewness, distr.kurtosis]);
    v.extend([meta.lin_adj_r2, meta.lin_intercept, meta.lin_coef_min, meta.lin_coef_max, meta.quad_adj_r2, meta.quad_cond]);
    v.extend(disp.ratio_mean);
    v.extend(disp.ratio_median);
    v.extend(disp.diff_mean);
    v.extend(disp.diff_median);
    v.extend([icf.h_max, icf.eps_s, icf.eps_max, icf.eps_ratio, icf.m0]);
    v.extend([nbc.sd_ratio, nbc.mean_ratio, nbc.cor, nbc.coeff_var, nbc.fitness_cor]);
    v.extend([y_min, y_max, mean(y), sd(y)]);
    debug_assert_eq!(v.len(), FEATURE_NAMES.len());
    for x in &mut v {
        if !x.is_finite() {
            *x = T::zero();
        }
    }
    Ok(v)
}

/// Median of each feature over `reps` independent uniform samples of size `n`.
pub fn compute_features<T: Real>(problem: &ProblemInstance<T>, n: usize, reps: usize, seed: u64) -> Result<FeatureVector<T>> {
    compute_features_with(problem, n, reps, seed, &IcSettings::default())
}

pub fn compute_features_with<T: Real>(
    problem: &ProblemInstance<T>,
    n: usize,
    reps: usize,
    seed: u64,
    ic: &IcSettings<T>,
) -> Result<FeatureVector<T>> {
    if reps == 0 {
        return Err(Error::argument("feature replications must be >= 1"));
    }
    let id = problem.id();
    let per_rep = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = seed::derive_labeled(seed, "ela", &[id.fid as u64, id.iid as u64, id.dim as u64, r as u64]);
            let mut p = problem.clone();
            let sample = uniform_sample(&mut p, n, s)?;
            sample_features(&sample, ic)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = (0..FEATURE_NAMES.len())
        .map(|k| {
            let mut col: Vec<T> = per_rep.iter().map(|r| r[k]).collect();
            median_in_place(&mut col)
        })
        .collect();
    Ok(FeatureVector {
        problem: id,
        n_samples: n,
        n_reps: reps,
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
    })
}

/// Restricts `vector` to `names`, in the order given.
pub fn select_features<T: Real, S: AsRef<str>>(vector: &FeatureVector<T>, names: &[S]) -> Result<FeatureVector<T>> {
    let mut values = Vec::with_capacity(names.len());
    let mut out_names: Vec<String> = Vec::with_capacity(names.len());
    for name in names {
        let name = name.as_ref();
        if out_names.iter().any(|n| n == name) {
            return Err(Error::argument(format!("duplicate feature {name:?}")));
        }
        let v = vector.get(name).ok_or_else(|| Error::argument(format!("unknown feature {name:?}")))?;
        values.push(v);
        out_names.push(name.to_string());
    }
    Ok(FeatureVector { names: out_names, values, ..vector.clone() })
}
