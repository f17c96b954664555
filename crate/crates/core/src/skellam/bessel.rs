//! Modified Bessel function of the first kind with real order, evaluated
//! by its power series with gamma-generalized factorials:
//!
//! `I_ν(x) = Σ_t (x/2)^(2t+ν) / (t!·Γ(t+ν+1))`
//!
//! The series is truncated once a term falls below 1e-16 of the partial
//! sum, or after 200 terms.

use crate::error::{Error, Result};

/// Hard cap on series length.
pub const MAX_TERMS: usize = 200;
const TERM_REL_EPS: f64 = 1e-16;

/// I_ν(x) for real ν > −1 and x ≥ 0.
pub fn bessel_i(order: f64, arg: f64) -> Result<f64> {
    if arg.is_nan() || arg < 0.0 {
        return Err(Error::invalid(format!(
            "bessel_i argument {} must be >= 0",
            arg
        )));
    }
    if order.is_nan() || order <= -1.0 {
        return Err(Error::invalid(format!(
            "bessel_i order {} must be > -1",
            order
        )));
    }
    if arg == 0.0 {
        // Only the t=0 term (x/2)^ν/Γ(ν+1) survives; it is 1 at ν=0,
        // 0 for ν>0, and divergent for ν<0.
        return if order == 0.0 {
            Ok(1.0)
        } else if order > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::divergence(format!(
                "bessel_i({}, 0) diverges for negative order",
                order
            )))
        };
    }
    let half = arg / 2.0;
    let mut term = half.powf(order) / libm::tgamma(order + 1.0);
    let mut sum = term;
    for t in 1..=MAX_TERMS {
        let tf = t as f64;
        term *= half * half / (tf * (tf + order));
        sum += term;
        if !sum.is_finite() {
            return Err(Error::divergence(format!(
                "bessel_i({}, {}) overflowed at term {}",
                order, arg, t
            )));
        }
        if term.abs() < TERM_REL_EPS * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// Digamma ψ(x) for x > 0: recurrence below 8, then the asymptotic series.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma defined here for positive arguments only");
    let mut acc = 0.0;
    let mut z = x;
    while z < 8.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli-number tail of the asymptotic expansion.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    acc + z.ln() - 0.5 * inv - tail
}

/// One pass over the combined Skellam series
/// `S(a,b) = Σ_t a^(t+ν)·b^t / (t!·Γ(t+ν+1))`, ν = a−b, returning the pmf
/// `e^(−(a+b))·S` together with ∂log pmf/∂a and ∂log pmf/∂b.
///
/// The per-term log-derivative weights are
/// `w_a(t) = (t+ν)/a + ln a − ψ(t+ν+1)` and
/// `w_b(t) = t/b − ln a + ψ(t+ν+1)`, with ψ advanced by the recurrence
/// ψ(z+1) = ψ(z) + 1/z.
pub(crate) fn pmf_with_log_gradient(a: f64, b: f64) -> Result<(f64, f64, f64)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid(format!(
            "intensities must be positive, got ({}, {})",
            a, b
        )));
    }
    let nu = a - b;
    let ln_a = a.ln();
    let mut psi = digamma(nu + 1.0);
    let mut term = a.powf(nu) / libm::tgamma(nu + 1.0);
    let mut sum = term;
    let mut sum_da = term * (nu / a + ln_a - psi);
    let mut sum_db = term * (-ln_a + psi);
    for t in 1..=MAX_TERMS {
        let tf = t as f64;
        psi += 1.0 / (tf + nu); // ψ(t+ν+1) from ψ((t−1)+ν+1)
        term *= a * b / (tf * (tf + nu));
        sum += term;
        sum_da += term * ((tf + nu) / a + ln_a - psi);
        sum_db += term * (tf / b - ln_a + psi);
        if !sum.is_finite() {
            return Err(Error::divergence(format!(
                "skellam series overflowed at term {} for ({}, {})",
                t, a, b
            )));
        }
        if term.abs() < TERM_REL_EPS * sum.abs() {
            break;
        }
    }
    let pmf = (-(a + b)).exp() * sum;
    let dlog_da = -1.0 + sum_da / sum;
    let dlog_db = -1.0 + sum_db / sum;
    if !(pmf.is_finite() && dlog_da.is_finite() && dlog_db.is_finite()) {
        return Err(Error::divergence(format!(
            "non-finite skellam pmf/gradient for ({}, {})",
            a, b
        )));
    }
    Ok((pmf, dlog_da, dlog_db))
}
