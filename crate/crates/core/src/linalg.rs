//! Dense linear algebra for the small matrices used here (d ≤ a few dozen).

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Gram-Schmidt orthonormalization of the given vectors (applied twice for
/// numerical orthogonality). Vectors that collapse to zero are dropped.
pub fn orthonormalize<T: Real>(vectors: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let original = norm(v);
        let mut w = v.clone();
        for _pass in 0..2 {
            for b in &basis {
                let p = dot(&w, b);
                for (wi, &bi) in w.iter_mut().zip(b) {
                    *wi -= p * bi;
                }
            }
        }
        let n = norm(&w);
        if n > original * T::of(1e-10) && n > T::zero() {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    basis
}

/// Q factor of a square matrix via Gram-Schmidt on its columns. The implied
/// R factor has a positive diagonal. Returns `None` for singular input.
pub fn q_factor<T: Real>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.rows();
    let cols: Vec<Vec<T>> = (0..a.cols()).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    let q = orthonormalize(&cols);
    if q.len() != a.cols() {
        return None;
    }
    Some(Mat::from_fn(n, q.len(), |i, j| q[j][i]))
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues (ascending) and the matching eigenvectors as matrix
/// columns, or `None` if the input is non-finite or fails to converge.
pub fn symmetric_eigen<T: Real>(a: &Mat<T>) -> Option<(Vec<T>, Mat<T>)> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    if !a.is_finite() {
        return None;
    }
    let mut m = a.clone();
    // symmetrize
    for i in 0..n {
        for j in i + 1..n {
            let s = (m[(i, j)] + m[(j, i)]) / T::of(2.0);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let mut v = Mat::identity(n);
    let scale = m.frobenius();
    if scale == T::zero() {
        return Some((vec![T::zero(); n], v));
    }
    let tol = T::epsilon() * scale * T::of(1e-2);
    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged || !m.is_finite() {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Some((values, vectors))
}

/// Solves `gram · x = rhs` for a symmetric positive semi-definite `gram`
/// through its eigendecomposition, discarding eigenvalues below
/// `rel_tol · λ_max` (Moore-Penrose pseudo-inverse). The flag reports
/// whether any direction was discarded.
pub fn solve_psd_pinv<T: Real>(gram: &Mat<T>, rhs: &[T], rel_tol: T) -> Option<(Vec<T>, bool)> {
    let (values, vectors) = symmetric_eigen(gram)?;
    let n = values.len();
    let lmax = values.iter().copied().fold(T::zero(), T::max);
    let cut = lmax * rel_tol;
    let mut x = vec![T::zero(); n];
    let mut deficient = false;
    for k in 0..n {
        if values[k] <= cut || values[k] <= T::zero() {
            deficient = true;
            continue;
        }
        let proj: T = (0..n).map(|i| vectors[(i, k)] * rhs[i]).sum();
        let coef = proj / values[k];
        for i in 0..n {
            x[i] += coef * vectors[(i, k)];
        }
    }
    Some((x, deficient))
}
