//! Sampling helpers shared by the observation and channel models.

use crate::C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Draws a standard normal variate.
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws from `CN(0, var)`: real and imaginary parts are independent
/// `N(0, var/2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = libm::sqrt(var / 2.0);
    C64::new(s * normal(rng), s * normal(rng))
}

/// Draws uniformly from the half-open interval `[lo, hi)`; returns `lo` when
/// the interval is empty.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    lo + (hi - lo) * rng.random::<f64>()
}
