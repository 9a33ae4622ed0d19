//! Gaussian kernel integrals: the delta-sequence limit and the
//! small-width expansion of the heat kernel.

use std::f64::consts::PI;

use crate::error::{GeoflowError, Result};
use crate::quadrature::integrate_with_breaks;

/// Kernel widths, in units of the Gaussian scale, beyond which the tails are dropped.
const TRUNCATION: f64 = 10.0;

/// `int (f_a')^2 / f_a * sigma dx = int 4 a^2 x^2 f_a(x) sigma(x) dx` with
/// `f_a = sqrt(a/pi) exp(-a x^2)`, over `|x| <= 10 / sqrt(a)`.
///
/// The tolerance is `1e-10` relative to the kernel mass `2a`.
pub fn delta_claim1_lhs(sigma: impl Fn(f64) -> f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(GeoflowError::InvalidInput(format!("a must be positive, got {a}")));
    }
    let w = 1.0 / a.sqrt();
    let norm = (a / PI).sqrt();
    let f = |x: f64| 4.0 * a * a * x * x * norm * (-a * x * x).exp() * sigma(x);
    let breaks: Vec<f64> = [-TRUNCATION, -3.0, -1.0, 0.0, 1.0, 3.0, TRUNCATION]
        .iter()
        .map(|b| b * w)
        .collect();
    Ok(integrate_with_breaks(f, &breaks, 1e-10 * 2.0 * a)?.value)
}

/// `int exp(-(x/k)^2) / (k sqrt(pi)) f(x) dx`, truncated at `|x| = 12 k`.
pub fn kernel_expected(f: impl Fn(f64) -> f64, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(GeoflowError::InvalidInput(format!("kernel width must be positive, got {k}")));
    }
    let norm = 1.0 / (k * PI.sqrt());
    let g = |x: f64| norm * (-(x / k) * (x / k)).exp() * f(x);
    let breaks: Vec<f64> = [-12.0, -4.0, -1.0, 0.0, 1.0, 4.0, 12.0].iter().map(|b| b * k).collect();
    Ok(integrate_with_breaks(g, &breaks, 1e-13)?.value)
}

/// `kernel_expected(f, k) - f(0) - (k/2)^2 f''(0)`.
pub fn kernel_remainder(f: impl Fn(f64) -> f64, f0: f64, f2: f64, k: f64) -> Result<f64> {
    Ok(kernel_expected(f, k)? - f0 - 0.25 * k * k * f2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_test_function() {
        assert_eq!(delta_claim1_lhs(|_| 0.0, 1e4).unwrap(), 0.0);
    }

    #[test]
    fn normalization_and_symmetry() {
        for k in [0.05, 0.3, 2.0] {
            assert!((kernel_expected(|_| 1.0, k).unwrap() - 1.0).abs() < 1e-12);
            assert!(kernel_expected(|x| x, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(kernel_expected(|_| 1.0, 0.0).is_err());
        assert!(delta_claim1_lhs(|_| 1.0, -1.0).is_err());
    }
}
