//! Adaptive Gauss-Kronrod quadrature over [0, inf).
//!
//! The half line is mapped to [0, 1) by `y = x/(1-x)` and integrated with a
//! globally adaptive 15-point Kronrod / 7-point Gauss rule: the segment with
//! the largest error estimate is bisected until the summed estimates meet the
//! relative tolerance (with two orders of safety margin, since `|K15 - G7|`
//! estimates the coarser rule's error) or the subdivision budget runs out.

use crate::error::SkgError;
use crate::numerics::NeumaierSum;

/// Tolerance and effort budget for [`integrate_semi_infinite`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Target relative error of the returned value.
    pub rel_tol: f64,
    /// Maximum number of interval bisections before giving up.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-9, max_subdivisions: 256 }
    }
}

/// Kronrod abscissae on [-1, 1] (nonnegative half; the last entry is 0).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss-7 weights for the odd-indexed abscissae of `XGK` (the last applies
/// to the midpoint).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    kronrod: f64,
    err: f64,
}

/// Integrate `f` over [0, inf). `f` must be absolutely integrable; a
/// non-finite sample aborts with a domain error, exhausting the subdivision
/// budget reports non-convergence.
pub fn integrate_semi_infinite<F>(f: F, spec: &QuadratureSpec) -> Result<f64, SkgError>
where
    F: Fn(f64) -> f64,
{
    if !(spec.rel_tol > 0.0) {
        return Err(SkgError::InvalidParam {
            name: "rel_tol",
            message: format!("must be positive, got {}", spec.rel_tol),
        });
    }
    // Transformed integrand on [0, 1): f(x/(1-x)) / (1-x)^2.
    let g = |x: f64| {
        let om = 1.0 - x;
        let y = x / om;
        f(y) / (om * om)
    };

    let mut segments = vec![gk15(&g, 0.0, 1.0)?];
    for _ in 0..spec.max_subdivisions {
        let (total, err_total) = totals(&segments);
        if converged(total, err_total, spec.rel_tol) {
            return Ok(total);
        }
        // Bisect the segment with the largest error estimate; ties resolve
        // to the leftmost for determinism.
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|(_, s), (_, t)| {
                s.err.total_cmp(&t.err).then(t.a.total_cmp(&s.a))
            })
            .map(|(i, _)| i)
            .expect("segment list never empty");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            break; // interval no longer splittable in f64
        }
        segments[worst] = gk15(&g, seg.a, mid)?;
        segments.push(gk15(&g, mid, seg.b)?);
    }
    let (total, err_total) = totals(&segments);
    if converged(total, err_total, spec.rel_tol) {
        return Ok(total);
    }
    Err(SkgError::NonConvergence {
        routine: "integrate_semi_infinite",
        message: format!(
            "error estimate {err_total:.3e} exceeds tolerance after {} subdivisions (estimate {total:.12e})",
            spec.max_subdivisions
        ),
    })
}

fn converged(total: f64, err_total: f64, rel_tol: f64) -> bool {
    // Two orders of safety: |K-G| gauges the Gauss rule, not the returned
    // Kronrod value. The absolute floor accepts identically zero integrands.
    err_total <= 0.01 * rel_tol * total.abs().max(1e-280)
}

fn totals(segments: &[Segment]) -> (f64, f64) {
    // Fixed summation order (by left endpoint) for run-to-run determinism.
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&i, &j| segments[i].a.total_cmp(&segments[j].a));
    let mut total = NeumaierSum::new();
    let mut err = NeumaierSum::new();
    for i in order {
        total.add(segments[i].kronrod);
        err.add(segments[i].err);
    }
    (total.value(), err.value())
}

fn gk15<G>(g: &G, a: f64, b: f64) -> Result<Segment, SkgError>
where
    G: Fn(f64) -> f64,
{
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let contribution = if j == 7 {
            g(center)
        } else {
            g(center - half * x) + g(center + half * x)
        };
        if !contribution.is_finite() {
            return Err(SkgError::Domain {
                routine: "integrate_semi_infinite",
                message: format!(
                    "integrand not finite near transformed point {center:.6e} (half-width {half:.3e})"
                ),
            });
        }
        kronrod += wk * contribution;
        // Odd Kronrod indices (including the midpoint at j = 7) carry the
        // embedded 7-point Gauss rule.
        if j % 2 == 1 {
            gauss += WG[j / 2] * contribution;
        }
    }
    Ok(Segment { a, b, kronrod: kronrod * half, err: (kronrod - gauss).abs() * half })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn default_spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn exponential_total_mass() {
        let v = integrate_semi_infinite(|y| (-y).exp(), &default_spec()).unwrap();
        assert!(rel_err(v, 1.0) < 1e-9, "got {v}");
    }

    #[test]
    fn gamma_fourth_moment() {
        // integral of y^3 e^-y = Gamma(4) = 6
        let v = integrate_semi_infinite(|y| y * y * y * (-y).exp(), &default_spec()).unwrap();
        assert!(rel_err(v, 6.0) < 1e-9, "got {v}");
    }

    #[test]
    fn gaussian_half_mass() {
        let v = integrate_semi_infinite(|y| (-y * y).exp(), &default_spec()).unwrap();
        let want = std::f64::consts::PI.sqrt() / 2.0;
        assert!(rel_err(v, want) < 1e-9, "got {v}");
    }

    #[test]
    fn heavy_algebraic_tail() {
        let v = integrate_semi_infinite(|y| 1.0 / (1.0 + y * y), &default_spec()).unwrap();
        let want = std::f64::consts::FRAC_PI_2;
        assert!(rel_err(v, want) < 1e-9, "got {v}");
    }

    #[test]
    fn damped_oscillation() {
        let v = integrate_semi_infinite(|y| (-y).exp() * y.cos(), &default_spec()).unwrap();
        assert!(rel_err(v, 0.5) < 1e-9, "got {v}");
    }

    #[test]
    fn log_kernel_matches_exponential_integral() {
        // integral of ln(1+y) e^-y equals -e * Ei(-1); routes through a
        // different special-function implementation entirely.
        let v = integrate_semi_infinite(|y| y.ln_1p() * (-y).exp(), &default_spec()).unwrap();
        let want = -1f64.exp() * crate::numerics::exp_integral_ei(-1.0).unwrap();
        assert!(rel_err(v, want) < 1e-9, "got {v}, want {want}");
    }

    #[test]
    fn zero_integrand_is_zero() {
        let v = integrate_semi_infinite(|_| 0.0, &default_spec()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn exhausted_budget_reports_nonconvergence() {
        let spec = QuadratureSpec { rel_tol: 1e-15, max_subdivisions: 2 };
        let err = integrate_semi_infinite(|y| 1.0 / (1.0 + y * y), &spec).unwrap_err();
        assert!(matches!(err, SkgError::NonConvergence { .. }), "got {err:?}");
        assert!(err.is_numerical());
    }

    #[test]
    fn non_finite_integrand_is_domain_error() {
        let err = integrate_semi_infinite(
            |y| if y > 1.0 { f64::NAN } else { 1.0 },
            &default_spec(),
        )
        .unwrap_err();
        assert!(matches!(err, SkgError::Domain { .. }), "got {err:?}");
    }

    #[test]
    fn invalid_tolerance_rejected() {
        let spec = QuadratureSpec { rel_tol: 0.0, max_subdivisions: 10 };
        assert!(integrate_semi_infinite(|y| (-y).exp(), &spec).is_err());
    }

    proptest! {
        #[test]
        fn exponential_density_normalizes(mean in 0.01..100.0f64) {
            let v = integrate_semi_infinite(
                |y| (-y / mean).exp() / mean,
                &default_spec(),
            ).unwrap();
            prop_assert!(rel_err(v, 1.0) < 1e-8, "mean {mean}: mass {v}");
        }

        #[test]
        fn exponential_density_mean(mean in 0.01..100.0f64) {
            let v = integrate_semi_infinite(
                |y| y * (-y / mean).exp() / mean,
                &default_spec(),
            ).unwrap();
            prop_assert!(rel_err(v, mean) < 1e-8, "mean {mean}: got {v}");
        }
    }
}
