use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistrFeatures<T> {
    pub skewness: T,
    pub kurtosis: T,
}

/// Moment skewness `m3 / m2^1.5` and excess kurtosis `m4 / m2² - 3`.
/// Constant values give zeros.
pub fn ela_distr<T: Real>(y: &[T]) -> DistrFeatures<T> {
    let n = T::of_usize(y.len());
    let zero = DistrFeatures { skewness: T::zero(), kurtosis: T::zero() };
    if y.len() < 2 {
        return zero;
    }
    let mean = y.iter().copied().sum::<T>() / n;
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for &v in y {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let scale = mean.abs().max(T::one());
    if m2 <= (T::epsilon() * scale).powi(2) {
        return zero;
    }
    DistrFeatures { skewness: m3 / m2.powf(T::of(1.5)), kurtosis: m4 / (m2 * m2) - T::of(3.0) }
}
