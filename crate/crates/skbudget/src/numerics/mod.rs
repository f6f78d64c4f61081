//! Numerical building blocks: seeded random streams, the exponential
//! integral, Poisson tail utilities, adaptive quadrature and compensated
//! summation.

pub mod ei;
pub mod poisson;
pub mod quad;
pub mod stream;

pub use ei::{exp_integral_ei, exp_scaled_ei_neg};
pub use poisson::{poisson_pmf_cdf, poisson_quantile};
pub use quad::{integrate_semi_infinite, QuadratureSpec};
pub use stream::RandomStream;

/// Neumaier variant of Kahan compensated summation.
///
/// Running sums of per-slot key usage and cross-run aggregates add up to
/// millions of terms; compensation keeps the accumulated error at a few ulps
/// independent of length, which the budget-identity invariant
/// (`budget(t) = b0 - sum(usage)`) relies on.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
