use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Catalog member. Discriminants follow the BBOB numbering of the
/// function each one is modelled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Function {
    Sphere = 1,
    SeparableEllipsoid = 2,
    Rastrigin = 3,
    LinearSlope = 5,
    AttractiveSector = 6,
    Rosenbrock = 9,
    SharpRidge = 13,
    DifferentPowers = 14,
    SchaffersF7 = 17,
    Gallagher21 = 22,
}

pub const CATALOG: [Function; 10] = [
    Function::Sphere,
    Function::SeparableEllipsoid,
    Function::Rastrigin,
    Function::LinearSlope,
    Function::AttractiveSector,
    Function::Rosenbrock,
    Function::SharpRidge,
    Function::DifferentPowers,
    Function::SchaffersF7,
    Function::Gallagher21,
];

impl Function {
    pub fn from_fid(fid: u32) -> Result<Self> {
        CATALOG
            .iter()
            .copied()
            .find(|f| f.fid() == fid)
            .ok_or_else(|| Error::Catalog { fid, available: CATALOG.iter().map(|f| f.fid()).collect() })
    }

    pub fn fid(self) -> u32 {
        self as u32
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Sphere => "sphere",
            Function::SeparableEllipsoid => "separable-ellipsoid",
            Function::Rastrigin => "rastrigin",
            Function::LinearSlope => "linear-slope",
            Function::AttractiveSector => "attractive-sector",
            Function::Rosenbrock => "rosenbrock-rotated",
            Function::SharpRidge => "sharp-ridge",
            Function::DifferentPowers => "different-powers",
            Function::SchaffersF7 => "schaffers-f7",
            Function::Gallagher21 => "gallagher-21",
        }
    }

    /// Separable functions ignore the instance rotation.
    pub fn is_rotated(self) -> bool {
        !matches!(
            self,
            Function::Sphere | Function::SeparableEllipsoid | Function::Rastrigin | Function::LinearSlope
        )
    }
}

/// Exponent ramp `i / (d - 1)` used by the conditioned functions.
#[inline]
pub(crate) fn ramp<T: Real>(i: usize, d: usize) -> T {
    T::of_usize(i) / T::of_usize(d - 1)
}

/// Raw objective (without `f_opt`) in terms of `z`, the coordinates relative
/// to the optimum after any rotation. Every value is nonnegative and zero at
/// `z = 0`.
pub(crate) fn base_value<T: Real>(f: Function, z: &[T]) -> T {
    let d = z.len();
    let two = T::of(2.0);
    match f {
        Function::Sphere => z.iter().map(|&v| v * v).sum(),
        Function::SeparableEllipsoid => z
            .iter()
            .enumerate()
            .map(|(i, &v)| T::of(10.0).powf(T::of(6.0) * ramp::<T>(i, d)) * v * v)
            .sum(),
        Function::Rastrigin => {
            let cosines: T = z.iter().map(|&v| (two * T::PI() * v).cos()).sum();
            let squares: T = z.iter().map(|&v| v * v).sum();
            T::of(10.0) * (T::of_usize(d) - cosines) + squares
        }
        Function::SharpRidge => {
            let c: Vec<T> = conditioned(z, 10.0);
            let tail: T = c[1..].iter().map(|&v| v * v).sum();
            c[0] * c[0] + T::of(100.0) * tail.sqrt()
        }
        Function::DifferentPowers => z
            .iter()
            .enumerate()
            .map(|(i, &v)| v.abs().powf(two + T::of(4.0) * ramp::<T>(i, d)))
            .sum::<T>()
            .sqrt(),
        Function::SchaffersF7 => {
            let c: Vec<T> = conditioned(z, 10.0);
            let mut acc = T::zero();
            for w in c.windows(2) {
                let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
                let root = s.sqrt();
                let sine = (T::of(50.0) * s.powf(T::of(0.2))).sin();
                acc += root + root * sine * sine;
            }
            let m = acc / T::of_usize(d - 1);
            m * m
        }
        Function::Rosenbrock => {
            let scale = T::one().max(T::of_usize(d).sqrt() / T::of(8.0));
            let u: Vec<T> = z.iter().map(|&v| scale * v + T::one()).collect();
            u.windows(2)
                .map(|w| {
                    let a = w[0] * w[0] - w[1];
                    let b = w[0] - T::one();
                    T::of(100.0) * a * a + b * b
                })
                .sum()
        }
        // These need instance data and are evaluated in `problem`.
        Function::LinearSlope | Function::AttractiveSector | Function::Gallagher21 => {
            unreachable!("instance-dependent function evaluated through ProblemInstance")
        }
    }
}

/// Applies the diagonal conditioning `alpha^(0.5 i / (d-1))`.
fn conditioned<T: Real>(z: &[T], alpha: f64) -> Vec<T> {
    let d = z.len();
    z.iter()
        .enumerate()
        .map(|(i, &v)| T::of(alpha).powf(T::of(0.5) * ramp::<T>(i, d)) * v)
        .collect()
}
