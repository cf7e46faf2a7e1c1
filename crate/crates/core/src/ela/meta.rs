use super::SampleSet;
use crate::error::{Error, Result};
use crate::linalg::{solve_psd_pinv, Mat};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaFeatures<T> {
    pub lin_adj_r2: T,
    pub lin_intercept: T,
    pub lin_coef_min: T,
    pub lin_coef_max: T,
    pub quad_adj_r2: T,
    pub quad_cond: T,
    /// Set when either design matrix had to be solved with a pseudo-inverse.
    pub rank_deficient: bool,
}

/// Cap for `quad_cond` when the smallest quadratic coefficient vanishes.
const MAX_COND: f64 = 1e12;

struct Fit<T> {
    intercept: T,
    coefs: Vec<T>,
    adj_r2: T,
    deficient: bool,
}

/// Ordinary least squares of `y` on `1 + columns`.
///
/// Columns are centered and scaled to unit norm before forming the normal
/// equations, which are solved through a pseudo-inverse.
fn least_squares<T: Real>(columns: &[Vec<T>], y: &[T]) -> Fit<T> {
    let n = y.len();
    let p = columns.len();
    let nt = T::of_usize(n);
    let y_mean = y.iter().copied().sum::<T>() / nt;
    let yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let mut means = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    let mut std_cols: Vec<Vec<T>> = Vec::with_capacity(p);
    for col in columns {
        let m = col.iter().copied().sum::<T>() / nt;
        let centered: Vec<T> = col.iter().map(|&v| v - m).collect();
        let s = centered.iter().map(|&v| v * v).sum::<T>().sqrt();
        let s = if s > T::zero() { s } else { T::one() };
        std_cols.push(centered.into_iter().map(|v| v / s).collect());
        means.push(m);
        scales.push(s);
    }
    let gram = Mat::from_fn(p, p, |i, j| std_cols[i].iter().zip(&std_cols[j]).map(|(&a, &b)| a * b).sum());
    let rhs: Vec<T> = std_cols.iter().map(|c| c.iter().zip(&yc).map(|(&a, &b)| a * b).sum()).collect();
    let (beta, deficient) = solve_psd_pinv(&gram, &rhs, T::of(1e-12)).unwrap_or((vec![T::zero(); p], true));

    let mut sse = T::zero();
    let mut sst = T::zero();
    for i in 0..n {
        let fitted: T = (0..p).map(|j| beta[j] * std_cols[j][i]).sum();
        let e = yc[i] - fitted;
        sse += e * e;
        sst += yc[i] * yc[i];
    }
    let r2 = if sst > T::zero() { T::one() - sse / sst } else { T::one() };
    let adj_r2 = T::one() - (T::one() - r2) * T::of_usize(n - 1) / T::of_usize(n - p - 1);
    let coefs: Vec<T> = beta.iter().zip(&scales).map(|(&b, &s)| b / s).collect();
    let intercept = y_mean - coefs.iter().zip(&means).map(|(&c, &m)| c * m).sum::<T>();
    Fit { intercept, coefs, adj_r2, deficient }
}

/// Linear (`y ~ 1 + x`) and pure-quadratic (`y ~ 1 + x + x²`) meta-models.
pub fn ela_meta<T: Real>(sample: &SampleSet<T>) -> Result<MetaFeatures<T>> {
    let n = sample.n();
    let d = sample.dim();
    if n <= 2 * d + 1 {
        return Err(Error::argument(format!("meta-model needs n > 2d + 1 = {}, got {n}", 2 * d + 1)));
    }
    let linear: Vec<Vec<T>> = (0..d).map(|j| sample.points.iter().map(|x| x[j]).collect()).collect();
    let lin = least_squares(&linear, &sample.values);
    let abs: Vec<T> = lin.coefs.iter().map(|c| c.abs()).collect();

    let mut quad_cols = linear.clone();
    quad_cols.extend(linear.iter().map(|c| c.iter().map(|&v| v * v).collect::<Vec<T>>()));
    let quad = least_squares(&quad_cols, &sample.values);
    let q_abs: Vec<T> = quad.coefs[d..].iter().map(|c| c.abs()).collect();
    let q_max = q_abs.iter().copied().fold(T::zero(), T::max);
    let q_min = q_abs.iter().copied().fold(T::infinity(), T::min);
    let quad_cond = if q_max == T::zero() {
        T::one()
    } else {
        q_max / q_min.max(q_max / T::of(MAX_COND))
    };

    Ok(MetaFeatures {
        lin_adj_r2: lin.adj_r2,
        lin_intercept: lin.intercept,
        lin_coef_min: abs.iter().copied().fold(T::infinity(), T::min),
        lin_coef_max: abs.iter().copied().fold(T::zero(), T::max),
        quad_adj_r2: quad.adj_r2,
        quad_cond,
        rank_deficient: lin.deficient || quad.deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
    }

    #[test]
    fn affine_data() {
        let pts = random_points(100, 2, 1);
        let y = pts.iter().map(|x| 3.0 + 2.0 * x[0]).collect();
        let m = ela_meta(&SampleSet::new(pts, y).unwrap()).unwrap();
        assert!((m.lin_adj_r2 - 1.0).abs() < 1e-9);
        assert!((m.lin_intercept - 3.0).abs() < 1e-9);
        assert!((m.lin_coef_max - 2.0).abs() < 1e-9);
        assert!(m.lin_coef_min.abs() < 1e-9);
    }

    #[test]
    fn centered_sphere() {
        let pts = random_points(300, 5, 2);
        let y = pts.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
        let m = ela_meta(&SampleSet::new(pts, y).unwrap()).unwrap();
        assert!((m.quad_adj_r2 - 1.0).abs() < 1e-9);
        assert!((m.quad_cond - 1.0).abs() < 1e-9);
        assert!(!m.rank_deficient);
    }

    #[test]
    fn adj_r2_affine_invariant() {
        let pts = random_points(200, 3, 3);
        let y: Vec<f64> = pts.iter().map(|x| (x[0] * x[1]).sin() + x[2] * x[2]).collect();
        let s = SampleSet::new(pts, y.clone()).unwrap();
        let base = ela_meta(&s).unwrap().lin_adj_r2;
        let moved = ela_meta(&s.with_values(y.iter().map(|v| 4.5 * v - 17.0).collect())).unwrap().lin_adj_r2;
        assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn duplicated_column_is_flagged() {
        let pts: Vec<Vec<f64>> = random_points(50, 1, 4).into_iter().map(|x| vec![x[0], x[0]]).collect();
        let y = pts.iter().map(|x| 1.0 + x[0]).collect();
        let m = ela_meta(&SampleSet::new(pts, y).unwrap()).unwrap();
        assert!(m.rank_deficient);
        assert!((m.lin_adj_r2 - 1.0).abs() < 1e-9);
        assert!((m.lin_coef_max - 0.5).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let pts = random_points(5, 2, 5);
        let y = vec![0.0; 5];
        assert!(ela_meta(&SampleSet::new(pts, y).unwrap()).is_err());
    }
}
