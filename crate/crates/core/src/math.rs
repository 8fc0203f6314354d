//! Scalar and small-vector numerics.

use core::f64::consts::{LN_2, PI};

/// Logistic function, stable for any finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without forming `σ(x)`, so `log_sigmoid(-x)` stays accurate
/// where `1 - σ(x)` would round to zero.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Log density of `N(mean, variance)` at `x`.
#[inline]
pub fn gaussian_log_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * libm::log(2.0 * PI * variance) - d * d / (2.0 * variance)
}

/// Derivative of [`gaussian_log_density`] with respect to `x`.
#[inline]
pub fn gaussian_log_density_grad(x: f64, mean: f64, variance: f64) -> f64 {
    -(x - mean) / variance
}

/// Log density of the zero-mean normal truncated at 0 to one half-line,
/// evaluated inside its support.
#[inline]
pub fn half_normal_log_density(x: f64, variance: f64) -> f64 {
    gaussian_log_density(x, 0.0, variance) + LN_2
}
