//! Fixed-budget modular CMA-ES.
//!
//! The core follows the standard (μ/μ_w, λ)-CMA-ES with cumulative step-size
//! adaptation. Module switches alter sampling, selection, the covariance
//! update and the step-size rule; see [`ModuleConfig`] for the list.

use std::cmp::Ordering;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{ModuleConfig, RestartStrategy};
use super::sampler::OffspringSampler;
use crate::bench::ProblemInstance;
use crate::error::{Error, Result};
use crate::linalg::{norm, symmetric_eigen, Mat};
use crate::seed::{self, Rng};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CmaParams<T> {
    pub lambda: usize,
    pub mu: usize,
    pub sigma0: T,
    /// Initial mean; drawn uniformly from the box when absent.
    pub x0: Option<Vec<T>>,
}

impl<T: Real> CmaParams<T> {
    /// `λ = 4 + ⌊3 ln d⌋`, `μ = ⌊λ/2⌋`, `σ0 = 2`.
    pub fn defaults(dim: usize) -> Self {
        let lambda = 4 + (3.0 * (dim as f64).ln()).floor() as usize;
        CmaParams { lambda, mu: lambda / 2, sigma0: T::of(2.0), x0: None }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.mu < 1 || self.mu > self.lambda {
            return Err(Error::argument(format!("need 1 <= mu <= lambda, got mu={} lambda={}", self.mu, self.lambda)));
        }
        if !(self.sigma0 > T::zero() && self.sigma0.is_finite()) {
            return Err(Error::argument("sigma0 must be positive"));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != dim {
                return Err(Error::argument("x0 has the wrong dimension"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GenerationTrace<T> {
    /// Evaluations consumed once this generation finished.
    pub evals: u64,
    /// Best fitness among the points selected as parents.
    pub incumbent: T,
    pub best_so_far: T,
    pub restart: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RunResult<T> {
    pub best_precision: T,
    pub best_fitness: T,
    pub best_x: Vec<T>,
    pub evals_used: u64,
    pub restarts: usize,
    pub trace: Vec<GenerationTrace<T>>,
}

struct Individual<T> {
    x: Vec<T>,
    /// Step `(x - m) / σ` relative to the mean that generated it.
    y: Vec<T>,
    f: T,
    /// Index in sampling order; mirrored partners share `index / 2`.
    index: usize,
}

/// Strategy constants that depend only on `(d, λ, μ)`.
struct Constants<T> {
    weights: Vec<T>,
    mu_eff: T,
    c_sigma: T,
    d_sigma: T,
    c_c: T,
    c_1: T,
    c_mu: T,
    c_neg: T,
    chi_n: T,
}

fn recombination_weights<T: Real>(mu: usize, equal: bool) -> Vec<T> {
    let raw: Vec<T> = if equal {
        vec![T::one(); mu]
    } else {
        (1..=mu)
            .map(|i| (T::of_usize(mu) + T::of(0.5)).ln() - T::of_usize(i).ln())
            .collect()
    };
    let total: T = raw.iter().copied().sum();
    raw.into_iter().map(|w| w / total).collect()
}

impl<T: Real> Constants<T> {
    fn new(dim: usize, mu: usize, equal_weights: bool) -> Self {
        let d = T::of_usize(dim);
        let one = T::one();
        let two = T::of(2.0);
        let weights = recombination_weights::<T>(mu, equal_weights);
        let mu_eff = one / weights.iter().map(|&w| w * w).sum::<T>();
        let c_sigma = (mu_eff + two) / (d + mu_eff + T::of(5.0));
        let d_sigma = one + two * T::zero().max(((mu_eff - one) / (d + one)).sqrt() - one) + c_sigma;
        let c_c = (T::of(4.0) + mu_eff / d) / (d + T::of(4.0) + two * mu_eff / d);
        let c_1 = two / ((d + T::of(1.3)).powi(2) + mu_eff);
        let c_mu = (one - c_1).min(two * (mu_eff - two + one / mu_eff) / ((d + two).powi(2) + mu_eff));
        let c_neg = (one - c_mu) * T::of(0.25) * mu_eff / ((d + two).powf(T::of(1.5)) + two * mu_eff);
        let chi_n = d.sqrt() * (one - one / (T::of(4.0) * d) + one / (T::of(21.0) * d * d));
        Constants { weights, mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, c_neg, chi_n }
    }
}

/// Mutable state of one (re)start.
struct Strategy<T> {
    dim: usize,
    lambda: usize,
    mu: usize,
    k: Constants<T>,
    mean: Vec<T>,
    sigma: T,
    cov: Mat<T>,
    basis: Mat<T>,
    scales: Vec<T>,
    p_sigma: Vec<T>,
    p_c: Vec<T>,
    tpa_s: T,
    generation: usize,
    parents: Vec<Individual<T>>,
    incumbent: T,
    history: Vec<T>,
}

impl<T: Real> Strategy<T> {
    fn new(dim: usize, lambda: usize, mu: usize, sigma: T, mean: Vec<T>, config: &ModuleConfig) -> Self {
        Strategy {
            dim,
            lambda,
            mu,
            k: Constants::new(dim, mu, config.equal_recombination_weights),
            mean,
            sigma,
            cov: Mat::identity(dim),
            basis: Mat::identity(dim),
            scales: vec![T::one(); dim],
            p_sigma: vec![T::zero(); dim],
            p_c: vec![T::zero(); dim],
            tpa_s: T::zero(),
            generation: 0,
            parents: Vec::new(),
            incumbent: T::infinity(),
            history: Vec::new(),
        }
    }

    /// `B · D · z`
    fn transform(&self, z: &[T]) -> Vec<T> {
        let scaled: Vec<T> = z.iter().zip(&self.scales).map(|(&a, &s)| a * s).collect();
        self.basis.mul_vec(&scaled)
    }

    /// `C^{-1/2} · v = B · D^{-1} · Bᵀ · v`
    fn inv_sqrt_times(&self, v: &[T]) -> Vec<T> {
        let bt = self.basis.transpose().mul_vec(v);
        let scaled: Vec<T> = bt.iter().zip(&self.scales).map(|(&a, &s)| a / s).collect();
        self.basis.mul_vec(&scaled)
    }

    fn reset_covariance(&mut self) {
        self.cov = Mat::identity(self.dim);
        self.basis = Mat::identity(self.dim);
        self.scales = vec![T::one(); self.dim];
        self.p_c = vec![T::zero(); self.dim];
    }

    fn decompose(&mut self) {
        match symmetric_eigen(&self.cov) {
            Some((values, vectors))
                if values[0] > T::zero() && values[values.len() - 1] / values[0] < T::of(1e14) =>
            {
                self.scales = values.iter().map(|v| v.sqrt()).collect();
                self.basis = vectors;
            }
            _ => self.reset_covariance(),
        }
    }

    fn condition(&self) -> T {
        let max = self.scales.iter().copied().fold(T::zero(), T::max);
        let min = self.scales.iter().copied().fold(T::infinity(), T::min);
        (max / min).powi(2)
    }
}

struct Runner<'a, T: Real> {
    problem: &'a mut ProblemInstance<T>,
    config: ModuleConfig,
    budget: u64,
    rng: Rng,
    sampler: OffspringSampler,
    used: u64,
    best_f: T,
    best_x: Vec<T>,
    trace: Vec<GenerationTrace<T>>,
    restart: usize,
}

enum GenerationEnd {
    Continue,
    Restart,
    BudgetExhausted,
}

fn in_box<T: Real>(x: &[T], lo: T, hi: T) -> bool {
    x.iter().all(|&v| v >= lo && v <= hi)
}

impl<T: Real> Runner<'_, T> {
    fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    fn eval(&mut self, x: &[T]) -> Result<T> {
        debug_assert!(self.used < self.budget);
        let f = self.problem.evaluate(x)?;
        self.used += 1;
        if f < self.best_f {
            self.best_f = f;
            self.best_x = x.to_vec();
        }
        Ok(f)
    }

    fn uniform_point(&mut self) -> Vec<T> {
        let lo = self.problem.lower_bound().to_f64_lossy();
        let hi = self.problem.upper_bound().to_f64_lossy();
        (0..self.problem.dim()).map(|_| T::of(self.rng.random_range(lo..=hi))).collect()
    }

    fn threshold(&self) -> T {
        let d = T::of_usize(self.problem.dim());
        let diameter = d.sqrt() * (self.problem.upper_bound() - self.problem.lower_bound());
        let left = T::of(self.remaining() as f64 / self.budget as f64);
        T::of(0.1) * diameter * left.powf(T::of(0.995))
    }

    fn generation(&mut self, st: &mut Strategy<T>) -> Result<GenerationEnd> {
        let lo = self.problem.lower_bound();
        let hi = self.problem.upper_bound();
        let zs: Vec<Vec<T>> = self.sampler.sample(st.lambda, &mut self.rng);
        let threshold = self.config.threshold_convergence.then(|| self.threshold());

        let mut offspring: Vec<Individual<T>> = Vec::with_capacity(st.lambda);
        for (index, z) in zs.iter().enumerate() {
            if self.remaining() == 0 {
                break;
            }
            let mut y = st.transform(z);
            if let Some(t) = threshold {
                let len = st.sigma * norm(&y);
                if len > T::zero() && len < t {
                    let stretch = t / len;
                    y.iter_mut().for_each(|v| *v *= stretch);
                }
            }
            let mut x: Vec<T> = st.mean.iter().zip(&y).map(|(&m, &v)| m + st.sigma * v).collect();
            if !in_box(&x, lo, hi) {
                let retry = st.transform(&self.sampler.gaussian(&mut self.rng));
                x = st.mean.iter().zip(&retry).map(|(&m, &v)| m + st.sigma * v).collect();
                if !in_box(&x, lo, hi) {
                    x.iter_mut().for_each(|v| *v = v.max(lo).min(hi));
                }
                y = x.iter().zip(&st.mean).map(|(&a, &m)| (a - m) / st.sigma).collect();
            }
            let f = self.eval(&x)?;
            offspring.push(Individual { x, y, f, index });
            if self.config.sequential_selection && offspring.len() >= st.mu && st.incumbent.is_finite() && f < st.incumbent {
                break;
            }
        }

        if offspring.len() < st.mu {
            return Ok(GenerationEnd::BudgetExhausted);
        }

        let gen_min = offspring.iter().map(|o| o.f).fold(T::infinity(), T::min);
        let gen_max = offspring.iter().map(|o| o.f).fold(T::neg_infinity(), T::max);

        // Candidate pool for selection.
        let mut ranked: Vec<usize> = (0..offspring.len()).collect();
        ranked.sort_by(|&a, &b| cmp_fitness(&offspring[a], &offspring[b]));
        let mut eligible: Vec<usize> = if self.config.pairwise_selection && self.config.mirrored_sampling {
            let mut seen_pairs = std::collections::HashSet::new();
            ranked.iter().copied().filter(|&i| seen_pairs.insert(offspring[i].index / 2)).collect()
        } else {
            ranked.clone()
        };
        let mut pool: Vec<Individual<T>> = Vec::new();
        if self.config.elitism {
            for p in st.parents.drain(..) {
                let y = p.x.iter().zip(&st.mean).map(|(&a, &m)| (a - m) / st.sigma).collect();
                pool.push(Individual { y, ..p });
            }
        }
        let n_parents = pool.len();
        eligible.iter_mut().for_each(|i| *i += n_parents);
        let worst: Vec<usize> = ranked.iter().rev().take(st.mu).map(|&i| i + n_parents).collect();
        pool.extend(offspring);
        let mut candidates: Vec<usize> = (0..n_parents).chain(eligible).collect();
        candidates.sort_by(|&a, &b| cmp_fitness(&pool[a], &pool[b]));
        candidates.truncate(st.mu);

        let weights: Vec<T> = if candidates.len() == st.mu {
            st.k.weights.clone()
        } else {
            recombination_weights(candidates.len(), self.config.equal_recombination_weights)
        };

        let old_mean = st.mean.clone();
        let d = st.dim;
        let mut y_w = vec![T::zero(); d];
        for (&w, &i) in weights.iter().zip(&candidates) {
            for (acc, &v) in y_w.iter_mut().zip(&pool[i].y) {
                *acc += w * v;
            }
        }
        st.mean = old_mean.iter().zip(&y_w).map(|(&m, &v)| m + st.sigma * v).collect();

        // Evolution paths.
        let k = &st.k;
        let one = T::one();
        let two = T::of(2.0);
        let cs_norm = (k.c_sigma * (two - k.c_sigma) * k.mu_eff).sqrt();
        let whitened = st.inv_sqrt_times(&y_w);
        for (p, &w) in st.p_sigma.iter_mut().zip(&whitened) {
            *p = (one - k.c_sigma) * *p + cs_norm * w;
        }
        let ps_norm = norm(&st.p_sigma);
        let g = T::of_usize(st.generation + 1);
        let h_sigma = ps_norm / (one - (one - k.c_sigma).powf(two * g)).sqrt()
            < (T::of(1.4) + two / (T::of_usize(d) + one)) * k.chi_n;
        let hs = if h_sigma { one } else { T::zero() };
        let cc_norm = (k.c_c * (two - k.c_c) * k.mu_eff).sqrt();
        for (p, &v) in st.p_c.iter_mut().zip(&y_w) {
            *p = (one - k.c_c) * *p + hs * cc_norm * v;
        }

        // Covariance update.
        let decay = one - k.c_1 - k.c_mu + (one - hs) * k.c_1 * k.c_c * (two - k.c_c);
        let mut cov = Mat::from_fn(d, d, |r, c| {
            let mut v = decay * st.cov[(r, c)] + k.c_1 * st.p_c[r] * st.p_c[c];
            for (&w, &i) in weights.iter().zip(&candidates) {
                v += k.c_mu * w * pool[i].y[r] * pool[i].y[c];
            }
            v
        });
        if self.config.active_update {
            let neg_weights = recombination_weights::<T>(worst.len(), self.config.equal_recombination_weights);
            for (&w, &i) in neg_weights.iter().zip(&worst) {
                let y = &pool[i].y;
                for r in 0..d {
                    for c in 0..d {
                        cov[(r, c)] -= k.c_neg * w * y[r] * y[c];
                    }
                }
            }
        }
        st.cov = cov;

        // Step size.
        if self.config.two_point_step_size {
            if self.remaining() >= 2 {
                let shift: Vec<T> = st.mean.iter().zip(&old_mean).map(|(&a, &b)| a - b).collect();
                let alpha = T::of(0.5);
                let plus: Vec<T> = st.mean.iter().zip(&shift).map(|(&m, &s)| m + alpha * s).collect();
                let minus: Vec<T> = st.mean.iter().zip(&shift).map(|(&m, &s)| m - alpha * s).collect();
                let f_plus = self.eval(&plus)?;
                let f_minus = self.eval(&minus)?;
                let signal = if f_plus < f_minus { one } else { -one };
                let c = T::of(0.3);
                st.tpa_s = (one - c) * st.tpa_s + c * signal;
                st.sigma = st.sigma * (st.tpa_s / T::of_usize(d).sqrt()).exp();
            }
        } else {
            let exponent = (k.c_sigma / k.d_sigma) * (ps_norm / k.chi_n - one);
            st.sigma = st.sigma * exponent.min(one).exp();
        }

        st.decompose();
        st.generation += 1;

        let selected_best = pool[candidates[0]].f;
        st.incumbent = st.incumbent.min(selected_best);
        st.history.push(gen_min);
        if self.config.elitism {
            let mut taken: Vec<Option<Individual<T>>> = pool.into_iter().map(Some).collect();
            st.parents = candidates.iter().filter_map(|&i| taken[i].take()).collect();
        }
        self.trace.push(GenerationTrace {
            evals: self.used,
            incumbent: selected_best,
            best_so_far: self.best_f,
            restart: self.restart,
        });

        if self.remaining() == 0 {
            return Ok(GenerationEnd::BudgetExhausted);
        }
        if !st.sigma.is_finite() || st.sigma <= T::zero() || st.mean.iter().any(|v| !v.is_finite()) {
            return Ok(GenerationEnd::Restart);
        }
        if self.config.restart_strategy != RestartStrategy::None && self.should_restart(st, gen_min, gen_max) {
            return Ok(GenerationEnd::Restart);
        }
        Ok(GenerationEnd::Continue)
    }

    fn should_restart(&self, st: &Strategy<T>, gen_min: T, gen_max: T) -> bool {
        let max_scale = st.scales.iter().copied().fold(T::zero(), T::max);
        if st.sigma * max_scale < T::of(1e-12) {
            return true;
        }
        if st.condition() > T::of(1e13) {
            return true;
        }
        if gen_max - gen_min < T::of(1e-12) {
            return true;
        }
        let window = 10 + (30 * st.dim).div_ceil(st.lambda);
        if st.history.len() > window {
            let recent = &st.history[st.history.len() - window..];
            let earlier_best = st.history[..st.history.len() - window].iter().copied().fold(T::infinity(), T::min);
            let recent_best = recent.iter().copied().fold(T::infinity(), T::min);
            if recent_best >= earlier_best {
                return true;
            }
        }
        false
    }
}

fn cmp_fitness<T: Real>(a: &Individual<T>, b: &Individual<T>) -> Ordering {
    a.f.partial_cmp(&b.f).unwrap_or(Ordering::Equal)
}

/// Population schedule across restarts.
struct RestartSchedule {
    strategy: RestartStrategy,
    base_lambda: usize,
    base_mu: usize,
    large_restarts: u32,
    last_large_lambda: usize,
    large_budget: u64,
    small_budget: u64,
    last_regime_small: bool,
}

impl RestartSchedule {
    fn new(strategy: RestartStrategy, base_lambda: usize, base_mu: usize) -> Self {
        RestartSchedule {
            strategy,
            base_lambda,
            base_mu,
            large_restarts: 0,
            last_large_lambda: base_lambda,
            large_budget: 0,
            small_budget: 0,
            last_regime_small: false,
        }
    }

    fn scaled_mu(&self, lambda: usize) -> usize {
        ((lambda * self.base_mu) / self.base_lambda).clamp(1, lambda)
    }

    fn record(&mut self, evals: u64) {
        if self.last_regime_small {
            self.small_budget += evals;
        } else {
            self.large_budget += evals;
        }
    }

    /// `(lambda, mu, sigma multiplier)` for the next restart.
    fn next<T: Real>(&mut self, rng: &mut Rng) -> (usize, usize, T) {
        match self.strategy {
            RestartStrategy::None | RestartStrategy::Ipop => {
                self.large_restarts += 1;
                let lambda = self.base_lambda << self.large_restarts.min(20);
                (lambda, self.scaled_mu(lambda), T::one())
            }
            RestartStrategy::Bipop => {
                if self.large_restarts > 0 && self.small_budget < self.large_budget {
                    let u: f64 = rng.random();
                    let ratio = 0.5 * self.last_large_lambda as f64 / self.base_lambda as f64;
                    let lambda = ((self.base_lambda as f64) * ratio.powf(u * u)).floor().max(2.0) as usize;
                    self.last_regime_small = true;
                    (lambda, self.scaled_mu(lambda), T::of(10f64.powf(-2.0 * rng.random::<f64>())))
                } else {
                    self.large_restarts += 1;
                    let lambda = self.base_lambda << self.large_restarts.min(20);
                    self.last_large_lambda = lambda;
                    self.last_regime_small = false;
                    (lambda, self.scaled_mu(lambda), T::one())
                }
            }
        }
    }
}

/// Runs one variant on `problem` for at most `budget` evaluations.
///
/// Deterministic in `seed`. The problem's evaluation counter advances by
/// exactly `evals_used`.
pub fn run<T: Real>(
    problem: &mut ProblemInstance<T>,
    config: &ModuleConfig,
    params: &CmaParams<T>,
    budget: u64,
    seed: u64,
) -> Result<RunResult<T>> {
    let dim = problem.dim();
    params.validate(dim)?;
    if budget < params.lambda as u64 {
        return Err(Error::argument(format!("budget {budget} is smaller than lambda {}", params.lambda)));
    }
    let mut rng = seed::rng(seed);
    let sampler = OffspringSampler::new(config, dim, &mut rng)?;
    let mut runner = Runner {
        problem,
        config: *config,
        budget,
        rng,
        sampler,
        used: 0,
        best_f: T::infinity(),
        best_x: Vec::new(),
        trace: Vec::new(),
        restart: 0,
    };
    let mut schedule = RestartSchedule::new(config.restart_strategy, params.lambda, params.mu);
    let (mut lambda, mut mu, mut sigma_mult) = (params.lambda, params.mu, T::one());
    let mut start = match &params.x0 {
        Some(x0) => x0.clone(),
        None => runner.uniform_point(),
    };

    'restarts: loop {
        let mut st = Strategy::new(dim, lambda, mu, params.sigma0 * sigma_mult, start, config);
        let used_before = runner.used;
        loop {
            match runner.generation(&mut st)? {
                GenerationEnd::Continue => {}
                GenerationEnd::BudgetExhausted => break 'restarts,
                GenerationEnd::Restart => break,
            }
        }
        schedule.record(runner.used - used_before);
        runner.restart += 1;
        (lambda, mu, sigma_mult) = schedule.next(&mut runner.rng);
        start = runner.uniform_point();
    }

    let best_precision = runner.problem.precision(runner.best_f);
    Ok(RunResult {
        best_precision,
        best_fitness: runner.best_f,
        best_x: runner.best_x,
        evals_used: runner.used,
        restarts: runner.restart,
        trace: runner.trace,
    })
}
