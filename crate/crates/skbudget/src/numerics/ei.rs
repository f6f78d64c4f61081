//! Exponential integral Ei and the exponentially scaled variant used by the
//! closed-form conditional SKG rate.
//!
//! Branch layout for `exp_integral_ei`:
//!
//! * `|x| <= 6`: power series `gamma + ln|x| + sum x^k/(k*k!)`. On the
//!   negative side the partial sums grow to ~13 before cancelling down to
//!   `Ei(-6) ~ -3.6e-4`, which costs ~5 of the 16 digits; that is the worst
//!   point of the series region and still leaves ~1e-11 relative error.
//! * `x < -6`: `Ei(x) = -E1(-x)` with `E1` evaluated by a continued fraction
//!   (modified Lentz), no cancellation.
//! * `6 < x <= 40`: the same power series, all terms positive.
//! * `x > 40`: asymptotic expansion `e^x/x * sum k!/x^k` truncated at its
//!   smallest term.
//!
//! The scaled form `exp_scaled_ei_neg(z) = e^z * Ei(-z)` for `z > 0` is what
//! rate formulas actually consume; evaluating the continued fraction in
//! scaled form avoids the overflow/underflow of the separate factors (for
//! `z > ~745`, `Ei(-z)` underflows to zero while the scaled value is still
//! `~ -1/z`).

use crate::error::SkgError;

/// Euler-Mascheroni constant to f64 precision.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_MAX_TERMS: usize = 400;
const LENTZ_MAX_ITERS: usize = 400;

/// Exponential integral Ei(x).
///
/// Errors: `Domain` for `x == 0` (logarithmic singularity) and for
/// non-finite input. Relative accuracy is ~1e-13 or better away from the
/// series cancellation worst case near -6 (~1e-11 there).
pub fn exp_integral_ei(x: f64) -> Result<f64, SkgError> {
    if !x.is_finite() {
        return Err(SkgError::Domain {
            routine: "exp_integral_ei",
            message: format!("argument must be finite, got {x}"),
        });
    }
    if x == 0.0 {
        return Err(SkgError::Domain {
            routine: "exp_integral_ei",
            message: "Ei has a logarithmic singularity at 0".to_string(),
        });
    }
    if x < -6.0 {
        // Ei(x) = -E1(-x) = -exp(x) * scaled_e1(-x); exp underflows below
        // ~-745 and the result degrades gracefully to -0.
        Ok(-x.exp() * lentz_e1_scaled(-x)?)
    } else if x <= 40.0 {
        Ok(ei_series(x))
    } else {
        Ok(ei_asymptotic_pos(x))
    }
}

/// Exponentially scaled value `e^z * Ei(-z)` for `z > 0`.
///
/// Well-conditioned for the entire positive axis: tends to `ln z + gamma`
/// as `z -> 0+` and to `-1/z` as `z -> inf`, never overflowing.
pub fn exp_scaled_ei_neg(z: f64) -> Result<f64, SkgError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(SkgError::Domain {
            routine: "exp_scaled_ei_neg",
            message: format!("argument must be finite and positive, got {z}"),
        });
    }
    if z <= 6.0 {
        // |Ei(-z)| >= 3.6e-4 and e^z <= 404 here; the plain product is exact
        // to rounding.
        Ok(z.exp() * ei_series(-z))
    } else {
        Ok(-lentz_e1_scaled(z)?)
    }
}

/// Power series `gamma + ln|x| + sum_{k>=1} x^k/(k*k!)`, valid for any
/// nonzero x but only used for |x| <= 40.
///
/// On the negative side the partial sums swing far above the result before
/// cancelling (|terms| peak ~13.5 at x = -6); compensated summation keeps
/// the accumulated error at the level of the final value instead of the
/// peak.
fn ei_series(x: f64) -> f64 {
    let mut u = 1.0; // x^k / k!
    let mut sum = crate::numerics::NeumaierSum::new();
    for k in 1..=SERIES_MAX_TERMS {
        u *= x / k as f64;
        let term = u / k as f64;
        sum.add(term);
        if term.abs() < 1e-18 * sum.value().abs().max(1e-300) && k as f64 > x.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum.value()
}

/// Asymptotic expansion for large positive x: `e^x/x * sum_k k!/x^k`,
/// truncated when terms stop decreasing or fall below roundoff.
fn ei_asymptotic_pos(x: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..=SERIES_MAX_TERMS {
        let next = term * k as f64 / x;
        if next >= term || next < 1e-18 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    x.exp() / x * sum
}

/// Scaled first exponential integral `e^z * E1(z)` for `z > 6`, by the
/// continued fraction `1/(z+1-) 1/(z+3-) 4/(z+5-) ...` evaluated with the
/// modified Lentz algorithm.
fn lentz_e1_scaled(z: f64) -> Result<f64, SkgError> {
    const FPMIN: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=LENTZ_MAX_ITERS {
        let a = -((i * i) as f64);
        b += 2.0;
        d = a.mul_add(d, b);
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + a / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            return Ok(h);
        }
    }
    Err(SkgError::NonConvergence {
        routine: "lentz_e1_scaled",
        message: format!("continued fraction for z = {z} not settled after {LENTZ_MAX_ITERS} iterations"),
    })
}
