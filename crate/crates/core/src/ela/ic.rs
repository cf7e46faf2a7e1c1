use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IcSettings<T> {
    /// Strictly increasing dead-zone widths; may start with 0.
    pub epsilon_grid: Vec<T>,
    pub settling_threshold: T,
    pub half_ratio: T,
    /// Sample index the nearest-neighbor tour starts from.
    pub tour_start: usize,
}

impl<T: Real> Default for IcSettings<T> {
    /// `ε ∈ {0} ∪ {10^k : k = -5, -4.75, …, 15}`, settling threshold 0.05, half ratio 0.5.
    fn default() -> Self {
        let mut grid = vec![T::zero()];
        grid.extend((0..=80).map(|i| T::of(10f64.powf(-5.0 + 0.25 * i as f64))));
        IcSettings { epsilon_grid: grid, settling_threshold: T::of(0.05), half_ratio: T::of(0.5), tour_start: 0 }
    }
}

impl<T: Real> IcSettings<T> {
    fn validate(&self) -> Result<()> {
        if self.epsilon_grid.is_empty() || self.epsilon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument("epsilon grid must be non-empty and strictly increasing"));
        }
        if self.epsilon_grid[0] < T::zero() {
            return Err(Error::argument("epsilon grid must be nonnegative"));
        }
        if !self.epsilon_grid.iter().any(|&e| e > T::zero()) {
            return Err(Error::argument("epsilon grid needs a positive value"));
        }
        for (name, v) in [("settling_threshold", self.settling_threshold), ("half_ratio", self.half_ratio)] {
            if !(v > T::zero() && v < T::one()) {
                return Err(Error::argument(format!("{name} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    fn min_positive(&self) -> T {
        self.epsilon_grid.iter().copied().find(|&e| e > T::zero()).expect("validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcFeatures<T> {
    pub h_max: T,
    pub eps_s: T,
    pub eps_max: T,
    pub eps_ratio: T,
    pub m0: T,
}

/// Greedy nearest-neighbor tour; ties go to the lower index.
pub(crate) fn nearest_neighbor_tour<T: Real>(points: &[Vec<T>], start: usize) -> Vec<usize> {
    let n = points.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut cur = start % n;
    visited[cur] = true;
    tour.push(cur);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = T::infinity();
        for j in 0..n {
            if visited[j] {
                continue;
            }
            let d: T = points[cur].iter().zip(&points[j]).map(|(&a, &b)| (a - b) * (a - b)).sum();
            if d < best_d || best == usize::MAX {
                best = j;
                best_d = d;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

/// Slopes between consecutive tour points, skipping zero-length steps.
pub(crate) fn tour_slopes<T: Real>(sample: &SampleSet<T>, tour: &[usize]) -> Vec<T> {
    tour.windows(2)
        .filter_map(|w| {
            let d = dist(&sample.points[w[0]], &sample.points[w[1]]);
            (d > T::zero()).then(|| (sample.values[w[1]] - sample.values[w[0]]) / d)
        })
        .collect()
}

pub(crate) fn symbols<T: Real>(slopes: &[T], eps: T) -> Vec<i8> {
    slopes
        .iter()
        .map(|&s| if s > eps { 1 } else if s < -eps { -1 } else { 0 })
        .collect()
}

/// Entropy (base 6) of consecutive unequal symbol pairs.
pub(crate) fn entropy(psi: &[i8]) -> f64 {
    if psi.len() < 2 {
        return 0.0;
    }
    let mut counts = [[0usize; 3]; 3];
    for w in psi.windows(2) {
        counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
    }
    let pairs = (psi.len() - 1) as f64;
    let mut h = 0.0;
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if a != b && c > 0 {
                let p = c as f64 / pairs;
                h -= p * p.ln() / 6f64.ln();
            }
        }
    }
    h
}

/// Length of the symbol string after dropping zeros and merging repeats,
/// divided by the number of symbols.
pub(crate) fn partial_information(psi: &[i8]) -> f64 {
    if psi.is_empty() {
        return 0.0;
    }
    let mut len = 0usize;
    let mut last = 0i8;
    for &s in psi.iter().filter(|&&s| s != 0) {
        if s != last {
            len += 1;
            last = s;
        }
    }
    len as f64 / psi.len() as f64
}

/// Information-content features of the slope sequence along a
/// nearest-neighbor tour.
pub fn information_content<T: Real>(sample: &SampleSet<T>, settings: &IcSettings<T>) -> Result<IcFeatures<T>> {
    settings.validate()?;
    let n = sample.n();
    if n < 3 {
        return Err(Error::argument("information content needs at least 3 points"));
    }
    let eps_min = settings.min_positive();
    let log_eps_min = eps_min.log10();
    if sample.values.iter().all(|&v| v == sample.values[0]) {
        return Ok(IcFeatures { h_max: T::zero(), eps_s: log_eps_min, eps_max: eps_min, eps_ratio: log_eps_min, m0: T::zero() });
    }
    let tour = nearest_neighbor_tour(&sample.points, settings.tour_start);
    let slopes = tour_slopes(sample, &tour);
    let log_or_min = |e: T| if e > T::zero() { e.log10() } else { log_eps_min };

    let grid = &settings.epsilon_grid;
    let hs: Vec<T> = grid.iter().map(|&e| T::of(entropy(&symbols(&slopes, e)))).collect();
    let ms: Vec<T> = grid.iter().map(|&e| T::of(partial_information(&symbols(&slopes, e)))).collect();
    let m0 = T::of(partial_information(&symbols(&slopes, T::zero())));

    let mut h_max = hs[0];
    let mut eps_max = grid[0];
    for (&h, &e) in hs.iter().zip(grid) {
        if h > h_max {
            h_max = h;
            eps_max = e;
        }
    }
    let eps_s = grid
        .iter()
        .zip(&hs)
        .find(|&(_, &h)| h < settings.settling_threshold)
        .map(|(&e, _)| log_or_min(e))
        .unwrap_or_else(|| grid[grid.len() - 1].log10());
    let eps_ratio = grid
        .iter()
        .zip(&ms)
        .rev()
        .find(|&(_, &m)| m >= settings.half_ratio * m0)
        .map(|(&e, _)| log_or_min(e))
        .unwrap_or(log_eps_min);

    Ok(IcFeatures { h_max, eps_s, eps_max, eps_ratio, m0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let s = IcSettings::<f64>::default();
        assert_eq!(s.epsilon_grid.len(), 82);
        assert_eq!(s.epsilon_grid[0], 0.0);
        assert!((s.epsilon_grid[1] - 1e-5).abs() < 1e-20);
        assert!((s.epsilon_grid[81] - 1e15).abs() < 1.0);
        s.validate().unwrap();
    }

    #[test]
    fn alternating_symbols() {
        // 4 symbols → 3 consecutive pairs: (1,-1) twice, (-1,1) once.
        let psi = [1, -1, 1, -1];
        let expected = -((2.0 / 3.0f64) * (2.0 / 3.0f64).ln() + (1.0 / 3.0f64) * (1.0 / 3.0f64).ln()) / 6f64.ln();
        assert!((entropy(&psi) - expected).abs() < 1e-15);
        assert!((entropy(&psi) - 0.355_245_3).abs() < 1e-7);
        assert_eq!(partial_information(&psi), 1.0);
    }

    #[test]
    fn monotone_along_line() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let s = SampleSet::new(pts, y).unwrap();
        let tour = nearest_neighbor_tour(&s.points, 0);
        assert_eq!(tour, (0..10).collect::<Vec<_>>());
        let slopes = tour_slopes(&s, &tour);
        let psi = symbols(&slopes, 0.0);
        assert_eq!(entropy(&psi), 0.0);
        assert!((partial_information(&psi) - 1.0 / 9.0).abs() < 1e-15);
        // dead zone above every slope: all zeros
        let big = symbols(&slopes, 1e3);
        assert!(big.iter().all(|&v| v == 0));
        assert_eq!(entropy(&big), 0.0);
        assert_eq!(partial_information(&big), 0.0);
        let f = information_content(&s, &IcSettings::default()).unwrap();
        // partial dead zones mix 0 and 1 symbols
        assert!(f.h_max > 0.0 && f.eps_max >= 1.0 && f.eps_max <= 17.0);
        assert!((f.m0 - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn constant_values_are_degenerate() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0]).collect();
        let s = SampleSet::new(pts, vec![2.0; 5]).unwrap();
        let f = information_content(&s, &IcSettings::default()).unwrap();
        assert_eq!(f, IcFeatures { h_max: 0.0, eps_s: -5.0, eps_max: 1e-5, eps_ratio: -5.0, m0: 0.0 });
    }

    #[test]
    fn zero_length_steps_are_skipped() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]];
        let s = SampleSet::new(pts, vec![0.0, 5.0, 1.0]).unwrap();
        let tour = nearest_neighbor_tour(&s.points, 0);
        assert_eq!(tour_slopes(&s, &tour).len(), 1);
    }

    #[test]
    fn bad_settings() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0]).collect();
        let s = SampleSet::new(pts, vec![1.0, 2.0, 0.0, 3.0, 1.0]).unwrap();
        let mut bad = IcSettings::default();
        bad.epsilon_grid = vec![1.0, 0.5];
        assert!(information_content(&s, &bad).is_err());
        let mut bad = IcSettings::default();
        bad.half_ratio = 1.0;
        assert!(information_content(&s, &bad).is_err());
    }
}
