//! Ruin analysis for the constant-power budget walk: finite-time and
//! ultimate ruin probabilities on a budget grid, the critical message
//! probability, and the expected net key usage per slot.

use std::io::Write;

use crate::error::SkgError;
use crate::model::{expected_skg_rate, sample_channel, skg_rate, SnrPair, SystemParams};
use crate::numerics::RandomStream;

/// Fixed internal seed for the empirical rate table, so ruin numbers are
/// reproducible and independent of campaign seeds and worker counts.
const RATE_TABLE_SEED: u64 = 0x6b65_7972_6174_6573;

/// Draws behind the production rate table.
const RATE_TABLE_DRAWS: usize = 1_000_000;

/// Quantile bins the draws are compressed into.
const RATE_TABLE_BINS: usize = 4096;

/// Ruin mass allowed to sit at the top of the budget grid before the cap is
/// declared too small.
const CAP_LEAK_LIMIT: f64 = 1e-6;

/// Sup-norm change under which value iteration is considered converged.
const VALUE_ITER_TOL: f64 = 1e-8;

const VALUE_ITER_MAX: usize = 200_000;

/// Budget grid layout for the ruin recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Grid step in bits.
    pub step: f64,
    /// Top of the grid in bits; `None` selects `b0 + 100 * msg_len`.
    pub cap: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { step: 0.05, cap: None }
    }
}

/// Ruin probability evaluated on a uniform budget grid at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinGrid {
    /// Budgets in bits, ascending from 0 to the cap.
    pub budget_axis: Vec<f64>,
    /// Probability of ruin within `t` slots starting from each budget.
    pub psi: Vec<f64>,
    /// Horizon in slots.
    pub t: usize,
}

impl RuinGrid {
    /// Ruin probability at an arbitrary starting budget, by linear
    /// interpolation. Budgets at or below zero are already ruined; budgets
    /// past the cap clamp to the top grid value.
    pub fn psi_at(&self, budget: f64) -> f64 {
        let n = self.psi.len();
        if budget <= 0.0 {
            return 1.0;
        }
        let step = self.budget_axis[1] - self.budget_axis[0];
        let pos = budget / step;
        if pos >= (n - 1) as f64 {
            return self.psi[n - 1];
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        self.psi[lo] * (1.0 - frac) + self.psi[lo + 1] * frac
    }
}

/// Law of the per-slot net key usage at one constant power: an atom at
/// `+msg_len` with the message probability, and the negated SKG rate
/// otherwise, represented by an empirical quantile table.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageDistribution {
    /// Mass of the message atom.
    pub msg_mass: f64,
    /// Location of the atom in bits.
    pub msg_len: f64,
    /// Quantile midpoints of the SKG rate, ascending, equal mass each.
    pub rate_quantiles: Vec<f64>,
}

impl UsageDistribution {
    /// Estimate the rate table from channel draws at a fixed internal seed
    /// (production resolution: 1e6 draws into 4096 bins).
    pub fn estimate(params: &SystemParams, power: f64) -> Self {
        Self::with_resolution(params, power, RATE_TABLE_DRAWS, RATE_TABLE_BINS)
    }

    /// Estimate at a chosen resolution. Useful where a coarse table is
    /// enough, e.g. randomized invariant checks.
    pub fn with_resolution(
        params: &SystemParams,
        power: f64,
        draws: usize,
        bins: usize,
    ) -> Self {
        let mut rng = RandomStream::new(RATE_TABLE_SEED, 0);
        let mut rates: Vec<f64> = (0..draws)
            .map(|_| skg_rate(&SnrPair::new(power, &sample_channel(params, &mut rng))))
            .collect();
        rates.sort_unstable_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
        let rate_quantiles = (0..bins)
            .map(|k| rates[((k as f64 + 0.5) * draws as f64 / bins as f64) as usize])
            .collect();
        Self { msg_mass: params.p_tx, msg_len: params.msg_len, rate_quantiles }
    }

    /// Mean SKG rate implied by the table.
    pub fn mean_rate(&self) -> f64 {
        let n = self.rate_quantiles.len() as f64;
        self.rate_quantiles.iter().sum::<f64>() / n
    }

    /// Compress the rate part into grid-offset filter taps: each quantile's
    /// mass is split linearly between the two nearest budget-grid offsets.
    /// Taps sum to 1.
    fn taps(&self, step: f64) -> Vec<f64> {
        let max = self.rate_quantiles.last().copied().unwrap_or(0.0);
        let mut taps = vec![0.0; (max / step).floor() as usize + 2];
        let w = 1.0 / self.rate_quantiles.len() as f64;
        for &r in &self.rate_quantiles {
            let pos = r / step;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            taps[lo] += w * (1.0 - frac);
            taps[lo + 1] += w * frac;
        }
        taps
    }
}

/// Expected net key usage per slot at a constant power:
/// `p * msg_len - (1 - p) * E[R_SK]`. Negative means the store grows on
/// average.
pub fn expected_usage(params: &SystemParams, power: f64) -> Result<f64, SkgError> {
    let rate = checked_mean_rate(params, power)?;
    Ok(params.p_tx * params.msg_len - (1.0 - params.p_tx) * rate)
}

/// Largest message probability with a nonpositive drift:
/// `E[R_SK] / (E[R_SK] + msg_len)`, always in (0, 1).
pub fn critical_probability(params: &SystemParams, power: f64) -> Result<f64, SkgError> {
    let rate = checked_mean_rate(params, power)?;
    Ok(rate / (rate + params.msg_len))
}

fn checked_mean_rate(params: &SystemParams, power: f64) -> Result<f64, SkgError> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(SkgError::InvalidParam {
            name: "power",
            message: format!("must be positive and finite, got {power}"),
        });
    }
    expected_skg_rate(params, power)
}

/// One-step backward recursion on the budget grid.
///
/// For budgets b > 0,
/// `psi_b(t) = p * psi_{b-L}(t-1) + (1-p) * E_R[psi_{b+R}(t-1)]`
/// with `psi_{b'}(t-1) = 1` for b' <= 0; the point b = 0 is pinned to 1 and
/// mass past the cap is treated as never ruined (checked by the leak test).
struct Engine {
    p: f64,
    /// Message displacement in grid units.
    msg_offset: f64,
    /// Rate displacement filter, offset-indexed, mass 1.
    taps: Vec<f64>,
    n: usize,
    step: f64,
}

impl Engine {
    fn new(params: &SystemParams, power: f64, spec: &GridSpec) -> Result<Self, SkgError> {
        params.validate()?;
        if !(power > 0.0) || !power.is_finite() {
            return Err(SkgError::InvalidParam {
                name: "power",
                message: format!("must be positive and finite, got {power}"),
            });
        }
        if !(spec.step > 0.0) || !spec.step.is_finite() {
            return Err(SkgError::InvalidParam {
                name: "grid_step",
                message: format!("must be positive and finite, got {}", spec.step),
            });
        }
        if spec.step > params.msg_len / 10.0 {
            eprintln!(
                "warning: ruin grid step {} is coarse relative to the message \
                 length {}; expect discretization error",
                spec.step, params.msg_len
            );
        }
        let cap = spec.cap.unwrap_or(params.initial_budget + 100.0 * params.msg_len);
        if !(cap > params.initial_budget.max(0.0)) || !cap.is_finite() {
            return Err(SkgError::InvalidParam {
                name: "b_cap",
                message: format!("grid cap {cap} must exceed the initial budget"),
            });
        }
        let n = (cap / spec.step).ceil() as usize + 1;
        let dist = UsageDistribution::estimate(params, power);
        Ok(Self {
            p: params.p_tx,
            msg_offset: params.msg_len / spec.step,
            taps: dist.taps(spec.step),
            n,
            step: spec.step,
        })
    }

    fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.step).collect()
    }

    /// psi at horizon 0: ruined exactly when the budget is already empty.
    fn base(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        v[0] = 1.0;
        v
    }

    fn advance(&self, prev: &[f64], next: &mut [f64]) {
        // Message branch: budget drops by msg_len, possibly into ruin.
        for (i, slot) in next.iter_mut().enumerate() {
            let pos = i as f64 - self.msg_offset;
            let m = if pos <= 0.0 { 1.0 } else { lerp(prev, pos) };
            *slot = self.p * m;
        }
        // SKG branch: budget rises by the rate; outer loop over taps keeps
        // the inner update a contiguous axpy.
        let q = 1.0 - self.p;
        for (j, &w) in self.taps.iter().enumerate() {
            if w == 0.0 || j >= self.n {
                continue;
            }
            let c = q * w;
            let m = self.n - j;
            for i in 0..m {
                next[i] += c * prev[i + j];
            }
        }
        // An empty store is ruin, absorbing.
        next[0] = 1.0;
    }

    fn check_leak(&self, psi: &[f64]) -> Result<(), SkgError> {
        let top = psi[self.n - 1];
        if top > CAP_LEAK_LIMIT {
            return Err(SkgError::CapTooSmall { psi_at_cap: top, limit: CAP_LEAK_LIMIT });
        }
        Ok(())
    }
}

fn lerp(values: &[f64], pos: f64) -> f64 {
    let lo = pos.floor() as usize;
    if lo + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let frac = pos - lo as f64;
    values[lo] * (1.0 - frac) + values[lo + 1] * frac
}

/// Probability of ruin within `t` slots from the configured initial budget,
/// together with the full grid at horizon `t`.
pub fn finite_time_ruin(
    params: &SystemParams,
    power: f64,
    t: usize,
    spec: &GridSpec,
) -> Result<(f64, RuinGrid), SkgError> {
    let engine = Engine::new(params, power, spec)?;
    let mut prev = engine.base();
    let mut next = vec![0.0; engine.n];
    for _ in 0..t {
        engine.advance(&prev, &mut next);
        std::mem::swap(&mut prev, &mut next);
    }
    engine.check_leak(&prev)?;
    let grid = RuinGrid { budget_axis: engine.axis(), psi: prev, t };
    Ok((grid.psi_at(params.initial_budget), grid))
}

/// Ruin probability at the initial budget for every horizon `0..=t_max`
/// (one recursion pass, sampled per step).
pub fn finite_time_ruin_series(
    params: &SystemParams,
    power: f64,
    t_max: usize,
    spec: &GridSpec,
) -> Result<Vec<f64>, SkgError> {
    let engine = Engine::new(params, power, spec)?;
    let axis = engine.axis();
    let mut prev = engine.base();
    let mut next = vec![0.0; engine.n];
    let mut series = Vec::with_capacity(t_max + 1);
    let probe = RuinGrid { budget_axis: axis, psi: prev.clone(), t: 0 };
    series.push(probe.psi_at(params.initial_budget));
    let mut probe = probe;
    for t in 1..=t_max {
        engine.advance(&prev, &mut next);
        std::mem::swap(&mut prev, &mut next);
        probe.psi.copy_from_slice(&prev);
        probe.t = t;
        series.push(probe.psi_at(params.initial_budget));
    }
    engine.check_leak(&prev)?;
    Ok(series)
}

/// Probability of ever running out of key bits from the initial budget.
///
/// With a nonnegative drift the store empties almost surely and 1 is
/// returned immediately; otherwise the finite-time recursion is iterated to
/// its fixed point (sup-norm change below 1e-8).
pub fn ultimate_ruin(
    params: &SystemParams,
    power: f64,
    spec: &GridSpec,
) -> Result<f64, SkgError> {
    if expected_usage(params, power)? >= 0.0 {
        return Ok(1.0);
    }
    let engine = Engine::new(params, power, spec)?;
    let mut prev = engine.base();
    let mut next = vec![0.0; engine.n];
    let mut converged = false;
    for _ in 0..VALUE_ITER_MAX {
        engine.advance(&prev, &mut next);
        let change = prev
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut prev, &mut next);
        if change < VALUE_ITER_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SkgError::NonConvergence {
            routine: "ultimate_ruin",
            message: format!(
                "value iteration still moving after {VALUE_ITER_MAX} sweeps"
            ),
        });
    }
    engine.check_leak(&prev)?;
    let grid = RuinGrid { budget_axis: engine.axis(), psi: prev, t: usize::MAX };
    Ok(grid.psi_at(params.initial_budget))
}

/// Write a grid as CSV: `budget_bits,psi`.
pub fn write_ruin_csv<W: Write>(grid: &RuinGrid, mut w: W) -> std::io::Result<()> {
    writeln!(w, "budget_bits,psi")?;
    for (b, p) in grid.budget_axis.iter().zip(&grid.psi) {
        writeln!(w, "{b},{p}")?;
    }
    Ok(())
}
