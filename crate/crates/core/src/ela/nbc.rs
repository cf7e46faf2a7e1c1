use super::SampleSet;
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::stats::{mean, pearson, sd};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbcFeatures<T> {
    pub sd_ratio: T,
    pub mean_ratio: T,
    pub cor: T,
    pub coeff_var: T,
    pub fitness_cor: T,
}

/// Point `j` is better than `i` when `(y_j, j) < (y_i, i)`, so equal
/// fitness is ordered by index and only one point has no better neighbor.
fn better<T: Real>(y: &[T], j: usize, i: usize) -> bool {
    y[j] < y[i] || (y[j] == y[i] && j < i)
}

/// Nearest-neighbor and nearest-better distances; `nb[best]` is `None`.
/// Returns `(nn, nb, nb_index)`.
pub(crate) fn nn_nb<T: Real>(sample: &SampleSet<T>) -> (Vec<T>, Vec<Option<T>>, Vec<Option<usize>>) {
    let n = sample.n();
    let y = &sample.values;
    let mut nn = vec![T::infinity(); n];
    let mut nb: Vec<Option<T>> = vec![None; n];
    let mut nb_idx = vec![None; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = dist(&sample.points[i], &sample.points[j]);
            if d < nn[i] {
                nn[i] = d;
            }
            if better(y, j, i) && nb[i].is_none_or(|b| d < b) {
                nb[i] = Some(d);
                nb_idx[i] = Some(j);
            }
        }
    }
    (nn, nb, nb_idx)
}

/// `a / b` with `0 / 0 = 1` and `x / 0 = 0`.
fn safe_ratio<T: Real>(a: T, b: T) -> T {
    if b == T::zero() {
        if a == T::zero() { T::one() } else { T::zero() }
    } else {
        a / b
    }
}

/// Nearest-better clustering features.
///
/// Distance statistics use the nearest-neighbor distance of every point and
/// the nearest-better distance of every point except the best one; the
/// correlation pairs both distances over the non-best points.
pub fn nearest_better<T: Real>(sample: &SampleSet<T>) -> Result<NbcFeatures<T>> {
    let n = sample.n();
    if n < 3 {
        return Err(Error::argument("nearest-better clustering needs at least 3 points"));
    }
    let (nn, nb, nb_idx) = nn_nb(sample);
    let mut nn_paired = Vec::with_capacity(n - 1);
    let mut nb_paired = Vec::with_capacity(n - 1);
    let mut quotients = Vec::with_capacity(n - 1);
    for (i, b) in nb.iter().enumerate() {
        if let Some(b) = *b {
            nn_paired.push(nn[i]);
            nb_paired.push(b);
            if nn[i] > T::zero() {
                quotients.push(b / nn[i]);
            }
        }
    }
    let mut indegree = vec![T::zero(); n];
    for j in nb_idx.into_iter().flatten() {
        indegree[j] += T::one();
    }

    let constant = sample.values.iter().all(|&v| v == sample.values[0]);
    let coeff_var = if quotients.len() < 2 { T::zero() } else { safe_ratio(sd(&quotients), mean(&quotients)) };
    Ok(NbcFeatures {
        sd_ratio: safe_ratio(sd(&nn), sd(&nb_paired)),
        mean_ratio: safe_ratio(mean(&nn), mean(&nb_paired)),
        cor: if constant { T::zero() } else { pearson(&nn_paired, &nb_paired) },
        coeff_var,
        fitness_cor: if constant { T::zero() } else { pearson(&sample.values, &indegree) },
    })
}
