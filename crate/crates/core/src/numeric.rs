//! Small numerically careful building blocks.

use crate::error::{AoiError, Result};

/// Series cut-over for the cancellation-prone helpers below.
const SERIES_CUTOFF: f64 = 1e-3;

/// `1 − e^{−x}` without cancellation for small `x`.
#[inline]
pub(crate) fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `(1 − e^{−x}) / x`, equal to 1 at `x = 0`.
pub(crate) fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0
    } else {
        one_minus_exp(x) / x
    }
}

/// `1/x − 1/(e^x − 1)`, the mean of an `Exp(1)` draw truncated at `x`,
/// divided by `x`. Tends to ½ as `x → 0`.
pub(crate) fn truncated_exp_gap(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        0.5 - x / 12.0 + x * x * x / 720.0
    } else {
        1.0 / x - 1.0 / x.exp_m1()
    }
}

/// `e^{2x} − 1 − 2x·e^{x}`, which starts at order `x³`.
pub(crate) fn doubled_exp_residual(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Σ_{k≥3} (2^k − 2k) x^k / k!
        let mut sum = 0.0;
        let mut pow = x * x; // x^k / k!, updated before use
        let mut fact = 2.0;
        for k in 3..30 {
            pow *= x;
            fact *= k as f64;
            let coeff = 2f64.powi(k) - 2.0 * k as f64;
            let add = coeff * pow / fact;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (2.0 * x).exp_m1() - 2.0 * x * x.exp()
    }
}

/// Bisection on a sign-changing bracket. Stops when the bracket collapses to
/// adjacent floats, the residual is exactly zero, or after `max_iter` halvings.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(AoiError::NoThreshold(format!(
            "bracket [{lo}, {hi}] does not change sign ({f_lo}, {f_hi})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}
