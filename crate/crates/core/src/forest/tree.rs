use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ForestParams;
use crate::seed::Rng;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum TreeNode<T> {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split { feature: usize, threshold: T, left: usize, right: usize },
    Leaf { value: T, count: usize },
}

/// Nodes in a flat arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tree<T> {
    pub nodes: Vec<TreeNode<T>>,
}

impl<T: Real> Tree<T> {
    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { value, .. } => return *value,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

pub(crate) struct Builder<'a, T> {
    pub x: &'a [Vec<T>],
    pub y: &'a [T],
    pub params: &'a ForestParams,
    /// Position of each feature in name order, used to break ties.
    pub name_rank: &'a [usize],
}

struct Candidate<T> {
    cost: T,
    rank: usize,
    feature: usize,
    threshold: T,
}

impl<T: Real> Builder<'_, T> {
    pub fn grow(&self, rows: Vec<usize>, rng: &mut Rng) -> Tree<T> {
        let mut tree = Tree { nodes: Vec::new() };
        self.node(&mut tree, rows, 0, rng);
        tree
    }

    fn node(&self, tree: &mut Tree<T>, rows: Vec<usize>, depth: usize, rng: &mut Rng) -> usize {
        let id = tree.nodes.len();
        tree.nodes.push(TreeNode::Leaf { value: T::zero(), count: 0 });
        let reference = self.y[rows[0]];
        let (s, ss) = rows.iter().fold((T::zero(), T::zero()), |(s, ss), &r| {
            let d = self.y[r] - reference;
            (s + d, ss + d * d)
        });
        let n = T::of_usize(rows.len());
        let sse = ss - s * s / n;
        let p = self.params;
        let splittable = rows.len() >= p.min_samples_split.max(2 * p.min_samples_leaf).max(2)
            && p.max_depth.is_none_or(|m| depth < m)
            && sse > T::zero();
        if splittable {
            if let Some(c) = self.best_split(&rows, reference, sse, rng) {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][c.feature] <= c.threshold);
                let left = self.node(tree, l, depth + 1, rng);
                let right = self.node(tree, r, depth + 1, rng);
                tree.nodes[id] = TreeNode::Split { feature: c.feature, threshold: c.threshold, left, right };
                return id;
            }
        }
        tree.nodes[id] = TreeNode::Leaf { value: reference + s / n, count: rows.len() };
        id
    }

    fn best_split(&self, rows: &[usize], reference: T, sse: T, rng: &mut Rng) -> Option<Candidate<T>> {
        let p = self.x[0].len();
        let mut features: Vec<usize> = (0..p).collect();
        let k = ((self.params.max_features * p as f64).ceil() as usize).clamp(1, p);
        if k < p {
            features.shuffle(rng);
            features.truncate(k);
        }
        // Costs within this tolerance count as ties.
        let tol = sse * T::of(1e-12);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<Candidate<T>> = None;
        let mut order = rows.to_vec();
        let total = rows.len();
        for f in features {
            order.sort_by(|&a, &b| self.x[a][f].partial_cmp(&self.x[b][f]).unwrap().then(a.cmp(&b)));
            let (mut s_all, mut ss_all) = (T::zero(), T::zero());
            for &r in &order {
                let d = self.y[r] - reference;
                s_all += d;
                ss_all += d * d;
            }
            let (mut s, mut ss) = (T::zero(), T::zero());
            for i in 0..total - 1 {
                let d = self.y[order[i]] - reference;
                s += d;
                ss += d * d;
                let (a, b) = (self.x[order[i]][f], self.x[order[i + 1]][f]);
                if a == b || i + 1 < min_leaf || total - i - 1 < min_leaf {
                    continue;
                }
                let nl = T::of_usize(i + 1);
                let nr = T::of_usize(total - i - 1);
                let (sr, ssr) = (s_all - s, ss_all - ss);
                let cost = (ss - s * s / nl) + (ssr - sr * sr / nr);
                let mut threshold = a + (b - a) / (T::one() + T::one());
                if !(threshold < b) {
                    threshold = a;
                }
                let cand = Candidate { cost, rank: self.name_rank[f], feature: f, threshold };
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        cand.cost < cur.cost - tol
                            || (cand.cost <= cur.cost + tol
                                && (cand.rank, cand.threshold) < (cur.rank, cur.threshold))
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        best.filter(|c| c.cost < sse - tol)
    }
}

pub(crate) fn bootstrap_rows(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}
