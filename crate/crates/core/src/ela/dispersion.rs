use std::cmp::Ordering;

use super::SampleSet;
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::stats::median_in_place;
use crate::Real;

/// Quantiles in percent: 2%, 5%, 10%, 25%.
pub const DISPERSION_QUANTILES: [usize; 4] = [2, 5, 10, 25];

/// Indexed by position in [`DISPERSION_QUANTILES`].
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionFeatures<T> {
    pub ratio_mean: [T; 4],
    pub ratio_median: [T; 4],
    pub diff_mean: [T; 4],
    pub diff_median: [T; 4],
}

/// Mean and median of all pairwise distances among `idx`.
fn pairwise_stats<T: Real>(points: &[Vec<T>], idx: &[usize]) -> (T, T) {
    let mut d = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            d.push(dist(&points[i], &points[j]));
        }
    }
    let mean = d.iter().copied().sum::<T>() / T::of_usize(d.len());
    (mean, median_in_place(&mut d))
}

/// Number of best points in the `pct` percent quantile: `⌈n · pct / 100⌉`,
/// raised to 2 so small samples still have a pairwise distance.
pub(crate) fn quantile_count(n: usize, pct: usize) -> usize {
    (n * pct).div_ceil(100).max(2).min(n)
}

/// Compares distances among the best-ranked points with those among all points.
pub fn dispersion<T: Real>(sample: &SampleSet<T>) -> Result<DispersionFeatures<T>> {
    let rows = dispersion_at(sample, &DISPERSION_QUANTILES)?;
    let z = T::zero();
    let mut out = DispersionFeatures { ratio_mean: [z; 4], ratio_median: [z; 4], diff_mean: [z; 4], diff_median: [z; 4] };
    for (k, r) in rows.into_iter().enumerate() {
        [out.ratio_mean[k], out.ratio_median[k], out.diff_mean[k], out.diff_median[k]] = r;
    }
    Ok(out)
}

/// `[ratio_mean, ratio_median, diff_mean, diff_median]` per percentage.
fn dispersion_at<T: Real>(sample: &SampleSet<T>, pcts: &[usize]) -> Result<Vec<[T; 4]>> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::argument("dispersion needs at least 2 points"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sample.values[a]
            .partial_cmp(&sample.values[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let (all_mean, all_median) = pairwise_stats(&sample.points, &order);
    Ok(pcts
        .iter()
        .map(|&pct| {
            let (mean, median) = pairwise_stats(&sample.points, &order[..quantile_count(n, pct)]);
            [ratio(mean, all_mean), ratio(median, all_median), mean - all_mean, median - all_median]
        })
        .collect())
}

/// `a / b`, with `0 / 0 = 1` for coincident samples.
fn ratio<T: Real>(a: T, b: T) -> T {
    if b == T::zero() {
        if a == T::zero() { T::one() } else { T::zero() }
    } else {
        a / b
    }
}
