use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bench::ProblemInstance;
use crate::error::{Error, Result};
use crate::seed;
use crate::Real;

/// Points and their objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SampleSet<T> {
    pub points: Vec<Vec<T>>,
    pub values: Vec<T>,
    pub seed: u64,
}

impl<T: Real> SampleSet<T> {
    /// Wraps externally produced data (no box or size checks).
    pub fn new(points: Vec<Vec<T>>, values: Vec<T>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::argument(format!("{} points but {} values", points.len(), values.len())));
        }
        if let Some(first) = points.first() {
            if points.iter().any(|p| p.len() != first.len()) {
                return Err(Error::argument("points have inconsistent dimensions"));
            }
        }
        Ok(SampleSet { points, values, seed: 0 })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn with_values(&self, values: Vec<T>) -> Self {
        SampleSet { points: self.points.clone(), values, seed: self.seed }
    }
}

/// `n` i.i.d. uniform points in the problem's box, evaluated on `problem`.
pub fn uniform_sample<T: Real>(problem: &mut ProblemInstance<T>, n: usize, seed: u64) -> Result<SampleSet<T>> {
    let d = problem.dim();
    if n < 10 * d {
        return Err(Error::argument(format!("sample size {n} below 10·d = {}", 10 * d)));
    }
    let lo = problem.lower_bound().to_f64_lossy();
    let hi = problem.upper_bound().to_f64_lossy();
    let mut rng = seed::rng(seed);
    let points: Vec<Vec<T>> = (0..n)
        .map(|_| (0..d).map(|_| T::of(rng.random_range(lo..=hi))).collect())
        .collect();
    let values = points.iter().map(|x| problem.evaluate(x)).collect::<Result<Vec<T>>>()?;
    Ok(SampleSet { points, values, seed })
}
