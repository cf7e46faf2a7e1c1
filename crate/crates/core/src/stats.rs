//! Small descriptive-statistics helpers.

use std::cmp::Ordering;

use crate::Real;

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::of_usize(xs.len())
}

/// Median; the mean of the two middle values for even lengths. NaN-free input expected.
pub fn median<T: Real>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    median_in_place(&mut v)
}

pub fn median_in_place<T: Real>(v: &mut [T]) -> T {
    let n = v.len();
    if n == 0 {
        return T::nan();
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    let mid = n / 2;
    let (lower, upper_mid, _) = v.select_nth_unstable_by(mid, cmp);
    let upper = *upper_mid;
    if n % 2 == 1 {
        upper
    } else {
        let below = lower
            .iter()
            .copied()
            .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
        (below + upper) / T::of(2.0)
    }
}

/// Sample standard deviation with the `n - 1` denominator; 0 for fewer than two values.
pub fn sd<T: Real>(xs: &[T]) -> T {
    let n = xs.len();
    if n < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::of_usize(n - 1)).sqrt()
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return T::zero();
    }
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = T::zero();
    let mut saa = T::zero();
    let mut sbb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return T::zero();
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Index of the smallest value; the earliest index wins ties.
pub fn argmin<T: Real>(xs: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if x < xs[b] => best = Some(i),
            _ => {}
        }
    }
    best
}
