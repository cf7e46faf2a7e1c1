use std::fmt;

use rand::Rng as _;
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::functions::{base_value, ramp, Function};
use crate::error::{Error, Result};
use crate::linalg::{q_factor, Mat};
use crate::seed;
use crate::Real;

/// Half-width of the search box `[-5, 5]^d`.
pub const DOMAIN_BOUND: f64 = 5.0;

/// Smallest reportable target precision; keeps `log10(precision)` finite.
pub const PRECISION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProblemId {
    pub fid: u32,
    pub iid: u32,
    pub dim: usize,
}

impl ProblemId {
    pub fn new(fid: u32, iid: u32, dim: usize) -> Self {
        ProblemId { fid, iid, dim }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}-i{}-d{}", self.fid, self.iid, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InstanceTransform<T> {
    /// Orthogonal `d × d` rotation.
    pub rotation: Mat<T>,
    /// Translation drawn uniformly from `[-4, 4]^d`.
    pub shift: Vec<T>,
    pub f_offset: T,
}

#[derive(Debug, Clone, PartialEq)]
struct Peak<T> {
    center: Vec<T>,
    weight: T,
    scales: Vec<T>,
}

/// One problem instance: a catalog function with a fixed transform and an
/// evaluation counter.
///
/// Evaluation takes `&mut self`, so an instance is used by one worker at a
/// time. Cloning yields a fresh counter.
#[derive(Debug)]
pub struct ProblemInstance<T> {
    id: ProblemId,
    function: Function,
    transform: InstanceTransform<T>,
    x_opt: Vec<T>,
    peaks: Vec<Peak<T>>,
    eval_count: u64,
}

impl<T: Real> Clone for ProblemInstance<T> {
    fn clone(&self) -> Self {
        ProblemInstance {
            id: self.id,
            function: self.function,
            transform: self.transform.clone(),
            x_opt: self.x_opt.clone(),
            peaks: self.peaks.clone(),
            eval_count: 0,
        }
    }
}

/// Builds the instance `(fid, iid, dim)`. Pure: the transform is drawn from a
/// stream seeded by a stable hash of the triple.
pub fn make_problem<T: Real>(fid: u32, iid: u32, dim: usize) -> Result<ProblemInstance<T>> {
    ProblemInstance::new(fid, iid, dim)
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(fid: u32, iid: u32, dim: usize) -> Result<Self> {
        let function = Function::from_fid(fid)?;
        if iid == 0 {
            return Err(Error::argument("instance id must be >= 1"));
        }
        if dim < 2 {
            return Err(Error::argument(format!("dimension must be >= 2, got {dim}")));
        }
        let id = ProblemId::new(fid, iid, dim);
        let mut rng = seed::rng(seed::derive_labeled(0, "instance", &[fid as u64, iid as u64, dim as u64]));

        let rotation = loop {
            let gauss = Mat::from_fn(dim, dim, |_, _| T::of(rng.sample::<f64, _>(StandardNormal)));
            if let Some(q) = q_factor(&gauss) {
                break q;
            }
        };
        let shift: Vec<T> = (0..dim).map(|_| T::of(rng.random_range(-4.0..=4.0))).collect();
        let f_offset = T::of(rng.random_range(-100.0..=100.0));

        let x_opt = match function {
            Function::LinearSlope => shift
                .iter()
                .map(|&s| if s < T::zero() { -T::of(DOMAIN_BOUND) } else { T::of(DOMAIN_BOUND) })
                .collect(),
            _ => shift.clone(),
        };

        let peaks = if function == Function::Gallagher21 {
            gallagher_peaks(&mut rng, &x_opt)
        } else {
            Vec::new()
        };

        Ok(ProblemInstance {
            id,
            function,
            transform: InstanceTransform { rotation, shift, f_offset },
            x_opt,
            peaks,
            eval_count: 0,
        })
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn function(&self) -> Function {
        self.function
    }

    pub fn dim(&self) -> usize {
        self.id.dim
    }

    pub fn transform(&self) -> &InstanceTransform<T> {
        &self.transform
    }

    /// Location of the global optimum. Equals the transform shift except for
    /// the linear slope, whose optimum sits on the box corner on the shift's
    /// side.
    pub fn x_opt(&self) -> &[T] {
        &self.x_opt
    }

    pub fn f_opt(&self) -> T {
        self.transform.f_offset
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn lower_bound(&self) -> T {
        -T::of(DOMAIN_BOUND)
    }

    pub fn upper_bound(&self) -> T {
        T::of(DOMAIN_BOUND)
    }

    /// Evaluates `f(x)` and counts the call. Points outside the box are
    /// evaluated normally.
    pub fn evaluate(&mut self, x: &[T]) -> Result<T> {
        if x.len() != self.id.dim {
            return Err(Error::argument(format!(
                "point has dimension {}, problem {} expects {}",
                x.len(),
                self.id,
                self.id.dim
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::argument(format!("coordinate {i} is not finite")));
        }
        self.eval_count += 1;
        Ok(self.value(x))
    }

    /// Target precision `max(best - f_opt, 1e-12)`.
    pub fn precision(&self, best_fitness: T) -> T {
        (best_fitness - self.f_opt()).max(T::of(PRECISION_FLOOR))
    }

    fn rotated_offset(&self, x: &[T], center: &[T]) -> Vec<T> {
        let diff: Vec<T> = x.iter().zip(center).map(|(&a, &b)| a - b).collect();
        self.transform.rotation.mul_vec(&diff)
    }

    fn value(&self, x: &[T]) -> T {
        let d = self.id.dim;
        let raw = match self.function {
            Function::LinearSlope => {
                let bound = T::of(DOMAIN_BOUND);
                x.iter()
                    .zip(&self.x_opt)
                    .enumerate()
                    .map(|(i, (&xi, &oi))| {
                        let s = oi.signum() * T::of(10.0).powf(ramp::<T>(i, d));
                        let zi = if oi * xi < bound * bound { xi } else { oi };
                        bound * s.abs() - s * zi
                    })
                    .sum()
            }
            Function::AttractiveSector => {
                let z = self.rotated_offset(x, &self.x_opt);
                let s: T = z
                    .iter()
                    .zip(&self.x_opt)
                    .map(|(&zi, &oi)| {
                        let w = if zi * oi > T::zero() { T::of(100.0) } else { T::one() };
                        (w * zi) * (w * zi)
                    })
                    .sum();
                s.powf(T::of(0.9))
            }
            Function::Gallagher21 => {
                let inv = T::one() / (T::of(2.0) * T::of_usize(d));
                let best = self
                    .peaks
                    .iter()
                    .map(|p| {
                        let z = self.rotated_offset(x, &p.center);
                        let q: T = z.iter().zip(&p.scales).map(|(&zi, &c)| c * zi * zi).sum();
                        p.weight * (-inv * q).exp()
                    })
                    .fold(T::zero(), T::max);
                let g = T::of(10.0) - best;
                g * g
            }
            f if f.is_rotated() => base_value(f, &self.rotated_offset(x, &self.x_opt)),
            f => {
                let z: Vec<T> = x.iter().zip(&self.x_opt).map(|(&a, &b)| a - b).collect();
                base_value(f, &z)
            }
        };
        self.f_opt() + raw
    }
}

/// Twenty-one Gaussian peaks; the first (weight 10) sits on the optimum and
/// the remaining weights stay below 10.
fn gallagher_peaks<T: Real>(rng: &mut seed::Rng, x_opt: &[T]) -> Vec<Peak<T>> {
    let d = x_opt.len();
    let n_local = 20usize;
    let mut alphas: Vec<f64> = (0..n_local).map(|j| 1000f64.powf(2.0 * j as f64 / 19.0)).collect();
    alphas.shuffle(rng);
    let mut peaks = Vec::with_capacity(n_local + 1);
    let mut push = |rng: &mut seed::Rng, center: Vec<T>, weight: f64, alpha: f64| {
        let mut scales: Vec<T> = (0..d)
            .map(|i| T::of(alpha.powf(0.5 * i as f64 / (d - 1) as f64) / alpha.powf(0.25)))
            .collect();
        scales.shuffle(rng);
        peaks.push(Peak { center, weight: T::of(weight), scales });
    };
    push(rng, x_opt.to_vec(), 10.0, 1000.0 * 1000.0);
    for (k, &alpha) in alphas.iter().enumerate() {
        let center = (0..d).map(|_| T::of(rng.random_range(-4.9..=4.9))).collect();
        let weight = 1.1 + 8.0 * k as f64 / 19.0;
        push(rng, center, weight, alpha);
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::CATALOG;

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(make_problem::<f64>(4, 1, 5), Err(Error::Catalog { .. })));
        assert!(matches!(make_problem::<f64>(1, 0, 5), Err(Error::Argument(_))));
        assert!(matches!(make_problem::<f64>(1, 1, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn optimum_evaluates_to_f_opt() {
        for f in CATALOG {
            let mut p = make_problem::<f64>(f.fid(), 1, 5).unwrap();
            let x = p.x_opt().to_vec();
            let v = p.evaluate(&x).unwrap();
            assert!((v - p.f_opt()).abs() < 1e-12, "{f:?}: {v} vs {}", p.f_opt());
            assert_eq!(p.precision(v), PRECISION_FLOOR);
        }
    }

    #[test]
    fn sphere_unit_offset() {
        let mut p = make_problem::<f64>(1, 1, 5).unwrap();
        let mut x = p.transform().shift.clone();
        x[0] += 1.0;
        let v = p.evaluate(&x).unwrap();
        assert!((v - p.f_opt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rastrigin_hand_values() {
        let mut p = make_problem::<f64>(3, 2, 5).unwrap();
        let mut x = p.x_opt().to_vec();
        x[0] += 1.0;
        // 10 * (5 - (4 + cos 2π)) + 1 = 1
        assert!((p.evaluate(&x).unwrap() - p.f_opt() - 1.0).abs() < 1e-9);
        x[0] -= 0.5;
        // 10 * (5 - (4 + cos π)) + 0.25 = 20.25
        assert!((p.evaluate(&x).unwrap() - p.f_opt() - 20.25).abs() < 1e-9);
    }

    #[test]
    fn precision_clamps() {
        let p = make_problem::<f64>(1, 1, 5).unwrap();
        let f = p.f_opt();
        assert_eq!(p.precision(f), 1e-12);
        assert!((p.precision(f + 0.5) - 0.5).abs() < 1e-12);
        assert_eq!(p.precision(f + 1e-15), 1e-12);
    }

    #[test]
    fn evaluate_validates_and_counts() {
        let mut p = make_problem::<f64>(6, 1, 3).unwrap();
        assert!(p.evaluate(&[0.0, 0.0]).is_err());
        assert!(p.evaluate(&[0.0, f64::NAN, 0.0]).is_err());
        assert_eq!(p.eval_count(), 0);
        let a = p.evaluate(&[1.0, 2.0, 3.0]).unwrap();
        let b = p.evaluate(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a, b);
        // outside the box is still evaluated
        p.evaluate(&[9.0, -20.0, 3.0]).unwrap();
        assert_eq!(p.eval_count(), 3);
        assert_eq!(p.clone().eval_count(), 0);
    }

    #[test]
    fn transform_invariants() {
        for f in CATALOG {
            for iid in 1..=4 {
                let p = make_problem::<f64>(f.fid(), iid, 5).unwrap();
                let r = &p.transform().rotation;
                let mut e = r.matmul(&r.transpose());
                for i in 0..5 {
                    e[(i, i)] -= 1.0;
                }
                assert!(e.frobenius() < 1e-10);
                assert!(p.transform().shift.iter().all(|s| s.abs() <= 4.0));
                assert!(p.f_opt().abs() <= 100.0);
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = make_problem::<f64>(22, 3, 5).unwrap();
        let b = make_problem::<f64>(22, 3, 5).unwrap();
        assert_eq!(a.transform(), b.transform());
        assert_eq!(a.peaks, b.peaks);
        let c = make_problem::<f64>(22, 4, 5).unwrap();
        assert_ne!(a.transform(), c.transform());
    }

    #[test]
    fn works_in_single_precision() {
        let mut p = make_problem::<f32>(9, 1, 4).unwrap();
        let x = p.x_opt().to_vec();
        let v = p.evaluate(&x).unwrap();
        assert!((v - p.f_opt()).abs() < 1e-4);
    }
}
