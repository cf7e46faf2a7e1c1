//! Bagged regression trees grown on variance reduction.

mod tree;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{seed, Real};
use tree::{bootstrap_rows, Builder};
pub use tree::{Tree, TreeNode};

/// Format version written into persisted forests.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Fraction of features tried at each split, in `(0, 1]`.
    pub max_features: f64,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 1000,
            max_features: 1.0,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::argument("n_trees must be >= 1"));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::argument("max_features must lie in (0, 1]"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::argument("min_samples_leaf must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetScale {
    Unscaled,
    Log10,
}

impl TargetScale {
    pub fn apply<T: Real>(self, y: T) -> T {
        match self {
            TargetScale::Unscaled => y,
            TargetScale::Log10 => y.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Forest<T> {
    pub version: u32,
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    /// Scale the training targets were on; predictions come back on it too.
    pub target_scale: TargetScale,
    pub trees: Vec<Tree<T>>,
}

fn check_inputs<T: Real>(x: &[Vec<T>], y: &[T], names: &[String]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::argument("need at least 2 training rows"));
    }
    if x.len() != y.len() {
        return Err(Error::argument(format!("{} rows but {} targets", x.len(), y.len())));
    }
    let p = names.len();
    if p == 0 {
        return Err(Error::argument("need at least one feature"));
    }
    for (r, row) in x.iter().enumerate() {
        if row.len() != p {
            return Err(Error::argument(format!("row {r} has {} features, expected {p}", row.len())));
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::argument(format!("non-finite feature at row {r}, column {:?}", names[c])));
        }
    }
    if let Some(r) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::argument(format!("non-finite target at row {r}")));
    }
    Ok(())
}

/// Fits `params.n_trees` trees; tree `t` draws its bootstrap sample and
/// feature subsets from `seed::derive(seed, [t])`.
pub fn fit<T: Real>(
    x: &[Vec<T>],
    y: &[T],
    feature_names: &[String],
    params: &ForestParams,
    target_scale: TargetScale,
    seed: u64,
) -> Result<Forest<T>> {
    params.validate()?;
    check_inputs(x, y, feature_names)?;
    let mut by_name: Vec<usize> = (0..feature_names.len()).collect();
    by_name.sort_by(|&a, &b| feature_names[a].cmp(&feature_names[b]).then(a.cmp(&b)));
    let mut name_rank = vec![0; by_name.len()];
    for (rank, &f) in by_name.iter().enumerate() {
        name_rank[f] = rank;
    }
    let builder = Builder { x, y, params, name_rank: &name_rank };
    let n = x.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
            let rows = if params.bootstrap { bootstrap_rows(n, &mut rng) } else { (0..n).collect() };
            builder.grow(rows, &mut rng)
        })
        .collect();
    Ok(Forest { version: MODEL_VERSION, params: params.clone(), feature_names: feature_names.to_vec(), target_scale, trees })
}

impl<T: Real> Forest<T> {
    /// Mean of the per-tree leaf values.
    pub fn predict(&self, x: &[T]) -> Result<T> {
        if x.len() != self.feature_names.len() {
            return Err(Error::argument(format!(
                "query has {} features, forest expects {}",
                x.len(),
                self.feature_names.len()
            )));
        }
        let leaves: Vec<T> = self.trees.iter().map(|t| t.predict(x)).collect();
        // Averaging offsets from the first leaf keeps constant forests exact.
        let r = leaves[0];
        let (lo, hi) = leaves.iter().fold((r, r), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let mean = r + leaves.iter().map(|&v| v - r).sum::<T>() / T::of_usize(leaves.len());
        Ok(mean.max(lo).min(hi))
    }

    pub fn predict_many(&self, rows: &[Vec<T>]) -> Result<Vec<T>> {
        rows.iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Forest<T> = serde_json::from_str(text)?;
        if f.version != MODEL_VERSION {
            return Err(Error::validation(format!("unsupported model version {}", f.version)));
        }
        if f.trees.is_empty() {
            return Err(Error::validation("model has no trees"));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Root-mean-square difference.
pub fn rmse<T: Real>(pred: &[T], truth: &[T]) -> Result<T> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::argument(format!("rmse needs equal non-empty lengths, got {} and {}", pred.len(), truth.len())));
    }
    let ss: T = pred.iter().zip(truth).map(|(&p, &t)| (p - t) * (p - t)).sum();
    Ok((ss / T::of_usize(pred.len())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    fn single_tree() -> ForestParams {
        ForestParams { n_trees: 1, bootstrap: false, ..Default::default() }
    }

    #[test]
    fn hand_split() {
        // Splits at 0.5, 1.5, 2.5 leave SSE 2/3, 0, 2/3: 1.5 wins.
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let y = [0.0, 0.0, 1.0, 1.0];
        let f = fit(&x, &y, &names(1), &single_tree(), TargetScale::Unscaled, 0).unwrap();
        match &f.trees[0].nodes[0] {
            TreeNode::Split { feature, threshold, .. } => assert_eq!((*feature, *threshold), (0, 1.5)),
            other => panic!("{other:?}"),
        }
        assert_eq!(f.trees[0].n_leaves(), 2);
        assert_eq!(f.predict_many(&x).unwrap(), y.to_vec());
    }

    #[test]
    fn constant_target() {
        let x: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![0.1; 9];
        let f = fit(&x, &y, &names(2), &ForestParams { n_trees: 7, ..Default::default() }, TargetScale::Unscaled, 3).unwrap();
        for q in [vec![0.0, 0.0], vec![100.0, -3.0], vec![4.5, 20.0]] {
            assert_eq!(f.predict(&q).unwrap(), 0.1);
        }
    }

    #[test]
    fn constant_features_give_stumps() {
        let x = vec![vec![1.0]; 5];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let f = fit(&x, &y, &names(1), &single_tree(), TargetScale::Unscaled, 0).unwrap();
        assert_eq!(f.trees[0].nodes.len(), 1);
        assert_eq!(f.predict(&[1.0]).unwrap(), 3.0);
    }

    #[test]
    fn two_tree_average() {
        let leaf = |v| Tree { nodes: vec![TreeNode::Leaf { value: v, count: 1 }] };
        let f = Forest {
            version: MODEL_VERSION,
            params: ForestParams { n_trees: 2, ..Default::default() },
            feature_names: names(1),
            target_scale: TargetScale::Unscaled,
            trees: vec![leaf(2.0), leaf(4.0)],
        };
        assert_eq!(f.predict(&[0.0]).unwrap(), 3.0);
        assert!(f.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let p = ForestParams::default();
        let x = vec![vec![1.0, f64::NAN], vec![2.0, 3.0]];
        let err = fit(&x, &[1.0, 2.0], &names(2), &p, TargetScale::Unscaled, 0).unwrap_err();
        assert!(err.to_string().contains("row 0"), "{err}");
        assert!(fit(&[vec![1.0]], &[1.0], &names(1), &p, TargetScale::Unscaled, 0).is_err());
        let bad = ForestParams { max_features: 0.0, ..Default::default() };
        assert!(fit(&[vec![1.0], vec![2.0]], &[1.0, 2.0], &names(1), &bad, TargetScale::Unscaled, 0).is_err());
    }

    #[test]
    fn depth_and_leaf_limits() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..16).map(|i| (i * i) as f64).collect();
        let p = ForestParams { max_depth: Some(2), ..single_tree() };
        let f = fit(&x, &y, &names(1), &p, TargetScale::Unscaled, 0).unwrap();
        assert!(f.trees[0].n_leaves() <= 4);
        let p = ForestParams { min_samples_leaf: 5, ..single_tree() };
        let f = fit(&x, &y, &names(1), &p, TargetScale::Unscaled, 0).unwrap();
        for n in &f.trees[0].nodes {
            if let TreeNode::Leaf { count, .. } = n {
                assert!(*count >= 5);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64).sqrt()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 3.3 + r[1].powi(3) / 7.0).collect();
        let f = fit(&x, &y, &names(2), &ForestParams { n_trees: 10, ..Default::default() }, TargetScale::Log10, 9).unwrap();
        let g = Forest::<f64>::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, g);
        let mut bumped = f.clone();
        bumped.version = 99;
        assert!(Forest::<f64>::from_json(&bumped.to_json().unwrap()).is_err());
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, -4.0], &[0.0, 0.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[2.5; 3], &[0.0; 3]).unwrap(), 2.5);
        assert!(rmse::<f64>(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse::<f64>(&[], &[]).is_err());
    }
}
