//! Offspring direction sampling: base sampler plus the mirrored and
//! orthogonal modules.

use rand::Rng as _;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use super::config::{BaseSampler, ModuleConfig};
use crate::error::{Error, Result};
use crate::linalg::{norm, orthonormalize};
use crate::seed::Rng;
use crate::Real;

/// Joe-Kuo direction numbers `(s, a, m_1..m_s)` for dimensions 2..=16;
/// dimension 1 is the van der Corput sequence.
const SOBOL_TABLE: [(u32, &[u32]); 15] = [
    (0, &[1]),
    (1, &[1, 3]),
    (1, &[1, 3, 1]),
    (2, &[1, 1, 1]),
    (1, &[1, 1, 3, 3]),
    (4, &[1, 3, 5, 13]),
    (2, &[1, 1, 5, 5, 17]),
    (4, &[1, 1, 5, 5, 5]),
    (7, &[1, 1, 7, 11, 19]),
    (11, &[1, 1, 5, 1, 1]),
    (13, &[1, 1, 1, 3, 11]),
    (14, &[1, 3, 5, 5, 31]),
    (1, &[1, 3, 3, 9, 7, 49]),
    (13, &[1, 1, 1, 15, 21, 21]),
    (16, &[1, 3, 1, 13, 27, 49]),
];

pub const SOBOL_MAX_DIM: usize = SOBOL_TABLE.len() + 1;

const BITS: usize = 32;

#[derive(Debug, Clone)]
struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u32,
}

impl Sobol {
    fn new(dim: usize) -> Result<Self> {
        if dim > SOBOL_MAX_DIM {
            return Err(Error::argument(format!(
                "sobol sampler supports at most {SOBOL_MAX_DIM} dimensions, got {dim}"
            )));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (i, v) in first.iter_mut().enumerate() {
            *v = 1 << (31 - i);
        }
        directions.push(first);
        for &(a, m) in SOBOL_TABLE.iter().take(dim.saturating_sub(1)) {
            let s = m.len();
            let mut v = [0u32; BITS];
            for i in 0..BITS {
                if i < s {
                    v[i] = m[i] << (31 - i);
                } else {
                    let mut x = v[i - s] ^ (v[i - s] >> s);
                    for k in 1..s {
                        if (a >> (s - 1 - k)) & 1 == 1 {
                            x ^= v[i - k];
                        }
                    }
                    v[i] = x;
                }
            }
            directions.push(v);
        }
        Ok(Sobol { directions, state: vec![0; dim], index: 0 })
    }

    /// Next point in Gray-code order, skipping the origin.
    fn next(&mut self) -> Vec<f64> {
        let c = self.index.trailing_ones() as usize;
        self.index = self.index.wrapping_add(1);
        for (s, dir) in self.state.iter_mut().zip(&self.directions) {
            *s ^= dir[c.min(BITS - 1)];
        }
        self.state.iter().map(|&s| s as f64 / 4_294_967_296.0).collect()
    }
}

#[derive(Debug, Clone)]
struct Halton {
    bases: Vec<u64>,
    index: u64,
}

impl Halton {
    fn new(dim: usize) -> Self {
        let mut bases = Vec::with_capacity(dim);
        let mut candidate = 2u64;
        while bases.len() < dim {
            if (2..candidate).take_while(|p| p * p <= candidate).all(|p| candidate % p != 0) {
                bases.push(candidate);
            }
            candidate += 1;
        }
        Halton { bases, index: 0 }
    }

    fn next(&mut self) -> Vec<f64> {
        self.index += 1;
        self.bases.iter().map(|&b| radical_inverse(self.index, b)).collect()
    }
}

fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while n > 0 {
        r += (n % base) as f64 * f;
        n /= base;
        f *= inv;
    }
    r
}

#[derive(Debug, Clone)]
enum Source {
    Gaussian,
    Sobol(Sobol),
    Halton(Halton),
}

/// Produces the `z` vectors of one generation.
#[derive(Debug, Clone)]
pub struct OffspringSampler {
    dim: usize,
    source: Source,
    /// Cranley-Patterson rotation for the low-discrepancy sources.
    shift: Vec<f64>,
    mirrored: bool,
    orthogonal: bool,
}

impl OffspringSampler {
    pub fn new(config: &ModuleConfig, dim: usize, rng: &mut Rng) -> Result<Self> {
        let source = match config.base_sampler {
            BaseSampler::Gaussian => Source::Gaussian,
            BaseSampler::Sobol => Source::Sobol(Sobol::new(dim)?),
            BaseSampler::Halton => Source::Halton(Halton::new(dim)),
        };
        let shift = match source {
            Source::Gaussian => Vec::new(),
            _ => (0..dim).map(|_| rng.random::<f64>()).collect(),
        };
        Ok(OffspringSampler {
            dim,
            source,
            shift,
            mirrored: config.mirrored_sampling,
            orthogonal: config.orthogonal_sampling,
        })
    }

    fn base<T: Real>(&mut self, rng: &mut Rng) -> Vec<T> {
        let uniform = match &mut self.source {
            Source::Gaussian => {
                return (0..self.dim).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect();
            }
            Source::Sobol(s) => s.next(),
            Source::Halton(h) => h.next(),
        };
        let normal = Normal::standard();
        uniform
            .iter()
            .zip(&self.shift)
            .map(|(&u, &s)| {
                let v = (u + s).fract().clamp(1e-12, 1.0 - 1e-12);
                T::of(normal.inverse_cdf(v))
            })
            .collect()
    }

    /// Draws `lambda` directions. With mirroring, entries `2k` and `2k + 1`
    /// are exact negatives of each other.
    pub fn sample<T: Real>(&mut self, lambda: usize, rng: &mut Rng) -> Vec<Vec<T>> {
        let n_base = if self.mirrored { lambda.div_ceil(2) } else { lambda };
        let mut base: Vec<Vec<T>> = (0..n_base).map(|_| self.base(rng)).collect();
        if self.orthogonal {
            for block in base.chunks_mut(self.dim) {
                let norms: Vec<T> = block.iter().map(|v| norm(v)).collect();
                let ortho = orthonormalize(block);
                if ortho.len() == block.len() {
                    for ((dst, src), n) in block.iter_mut().zip(ortho).zip(norms) {
                        *dst = src.into_iter().map(|x| x * n).collect();
                    }
                }
            }
        }
        if !self.mirrored {
            return base;
        }
        let mut out = Vec::with_capacity(lambda);
        for z in base {
            let neg = z.iter().map(|&x| -x).collect();
            out.push(z);
            if out.len() < lambda {
                out.push(neg);
            }
        }
        out
    }

    /// A plain Gaussian draw, used when repairing infeasible offspring.
    pub fn gaussian<T: Real>(&self, rng: &mut Rng) -> Vec<T> {
        (0..self.dim).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect()
    }
}
