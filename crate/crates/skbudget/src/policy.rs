//! Power-allocation policies: the per-slot decision contract and its
//! analytic implementations (constant, maximum, budget-balancing constant,
//! and the adaptive rate-per-power-cost maximizer).

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::SkgError;
use crate::model::{cond_expected_skg_rate, expected_skg_rate, linear_to_db, SystemParams};
use crate::numerics::poisson_quantile;

/// Per-slot power decision. Implementations must return a power in
/// `[0, params.p_max]` and be deterministic in their inputs; stochastic
/// (learned) policies live in the `rl` module behind the same trait.
pub trait PowerPolicy: Send + Sync {
    /// Power for slot `t` given the current budget, the legitimate channel
    /// gain (0 on message slots, where the value is unused), and the
    /// message flag.
    fn power(&self, t: usize, budget: f64, gain_bob: f64, message: bool, params: &SystemParams)
        -> f64;

    /// Serializable identity of the policy (kind + parameters).
    fn descriptor(&self) -> PolicyDescriptor;
}

/// Policy identity for configs, reports and reproducibility.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyDescriptor {
    Constant { power_db: f64 },
    MaxPower,
    ConstBudget,
    Adaptive { weight: f64 },
    Learned { path: String },
}

/// Fixed transmit power on every SKG slot.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    power: f64,
    descriptor: PolicyDescriptor,
}

impl ConstantPolicy {
    fn checked(power: f64, p_max: f64, descriptor: PolicyDescriptor) -> Result<Self, SkgError> {
        if !(power > 0.0) || !power.is_finite() || power > p_max {
            return Err(SkgError::InvalidParam {
                name: "power",
                message: format!("constant policy needs 0 < power <= p_max ({p_max}), got {power}"),
            });
        }
        Ok(Self { power, descriptor })
    }

    pub fn power_value(&self) -> f64 {
        self.power
    }
}

impl PowerPolicy for ConstantPolicy {
    fn power(&self, _t: usize, _budget: f64, _gain_bob: f64, _message: bool, _params: &SystemParams) -> f64 {
        self.power
    }

    fn descriptor(&self) -> PolicyDescriptor {
        self.descriptor.clone()
    }
}

/// Constant policy at the given linear power, validated against the cap.
pub fn constant_policy(power: f64, params: &SystemParams) -> Result<ConstantPolicy, SkgError> {
    ConstantPolicy::checked(
        power,
        params.p_max,
        PolicyDescriptor::Constant { power_db: linear_to_db(power) },
    )
}

/// The maximum-power baseline: transmit at the cap in every SKG slot.
pub fn max_power_policy(params: &SystemParams) -> Result<ConstantPolicy, SkgError> {
    ConstantPolicy::checked(params.p_max, params.p_max, PolicyDescriptor::MaxPower)
}

/// Constant power that balances the budget on average: the root of
/// `expected_skg_rate(P) = msg_len * p/(1-p)`, found by bisection in dB to
/// 1e-4 dB. The returned power makes the expected net usage zero, so the
/// budget walk is driftless.
pub fn const_budget_power(params: &SystemParams) -> Result<f64, SkgError> {
    params.validate()?;
    if params.p_tx == 0.0 {
        return Ok(0.0);
    }
    if params.p_tx >= 1.0 {
        return Err(SkgError::UnachievableTarget {
            routine: "const_budget_power",
            message: "every slot is a message slot; no power can balance the budget".to_string(),
        });
    }
    let target = params.msg_len * params.p_tx / (1.0 - params.p_tx);
    let hi_db = linear_to_db(params.p_max);
    if expected_skg_rate(params, params.p_max)? < target {
        return Err(SkgError::UnachievableTarget {
            routine: "const_budget_power",
            message: format!(
                "expected SKG rate at the power cap is below the balancing target {target:.6}"
            ),
        });
    }
    // Walk the lower bracket down until the rate falls below target; the
    // rate scales linearly with power at the bottom so a few steps suffice.
    let mut lo_db = -60.0;
    while expected_skg_rate(params, crate::model::db_to_linear(lo_db))? >= target {
        lo_db -= 60.0;
        if lo_db < -400.0 {
            return Ok(0.0); // target is numerically zero
        }
    }
    let mut lo = lo_db;
    let mut hi = hi_db;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if expected_skg_rate(params, crate::model::db_to_linear(mid))? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(crate::model::db_to_linear(0.5 * (lo + hi)))
}

/// Budget-balancing constant policy (see [`const_budget_power`]).
pub fn const_budget_policy(params: &SystemParams) -> Result<ConstantPolicy, SkgError> {
    let power = const_budget_power(params)?;
    ConstantPolicy::checked(power, params.p_max, PolicyDescriptor::ConstBudget)
}

/// Search grid for the adaptive policy's argmax.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArgmaxGridSpec {
    /// Coarse log-spaced grid size over [lower, p_max].
    pub points: usize,
    /// Lower end of the search range (linear power). The excluded region
    /// below cannot contain the argmax for positive surplus: the rate falls
    /// to zero faster than the power penalty shrinks.
    pub lower: f64,
    /// Relative tolerance of the golden-section refinement.
    pub rel_tol: f64,
}

impl Default for ArgmaxGridSpec {
    fn default() -> Self {
        Self { points: 64, lower: 1e-2, rel_tol: 5e-3 }
    }
}

/// Adaptive policy hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdaptiveConfig {
    /// Exponent scale: each surplus bit above the alert threshold raises the
    /// power penalty exponent by this much.
    pub weight: f64,
    pub grid: ArgmaxGridSpec,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { weight: 0.002, grid: ArgmaxGridSpec::default() }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<(), SkgError> {
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return Err(SkgError::InvalidParam {
                name: "weight",
                message: format!("must be positive and finite, got {}", self.weight),
            });
        }
        if self.grid.points < 2 {
            return Err(SkgError::InvalidParam {
                name: "grid.points",
                message: "need at least 2 grid points".to_string(),
            });
        }
        if !(self.grid.lower > 0.0) || !(self.grid.rel_tol > 0.0) {
            return Err(SkgError::InvalidParam {
                name: "grid",
                message: "lower bound and rel_tol must be positive".to_string(),
            });
        }
        Ok(())
    }
}

/// Maximize `f` (any unimodal-ish objective) over `[lo, hi]` by a log-spaced
/// coarse grid followed by golden-section refinement of the bracketing
/// interval. Returns the abscissa; a monotone objective resolves to the
/// corresponding boundary.
pub fn argmax_on_log_grid<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    points: usize,
    rel_tol: f64,
) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo && points >= 2);
    let ln_lo = lo.ln();
    let ln_hi = hi.ln();
    let step = (ln_hi - ln_lo) / (points - 1) as f64;
    let g = |x: f64| f(x.exp());
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..points {
        let v = g(ln_lo + i as f64 * step);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_i == 0 {
        return lo;
    }
    if best_i == points - 1 {
        return hi;
    }
    let mut a = ln_lo + (best_i - 1) as f64 * step;
    let mut b = ln_lo + (best_i + 1) as f64 * step;
    let tol = rel_tol.ln_1p();
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = g(d);
        }
    }
    (0.5 * (a + b)).exp()
}

/// Argmax over transmit power of the surplus-penalized rate objective
/// `g(P) = cond_expected_skg_rate(P, h, lambda_E) / P^(weight * delta_budget)`,
/// maximized in log form for numerical range.
pub fn argmax_g(
    gain_bob: f64,
    delta_budget: f64,
    cfg: &AdaptiveConfig,
    params: &SystemParams,
) -> f64 {
    debug_assert!(delta_budget > 0.0);
    let lambda_e = params.eve_rate_param();
    let exponent = cfg.weight * delta_budget;
    let objective = |p: f64| {
        let rate = cond_expected_skg_rate(p, gain_bob, lambda_e).unwrap_or(0.0);
        if rate <= 0.0 {
            f64::NEG_INFINITY
        } else {
            rate.ln() - exponent * p.ln()
        }
    };
    argmax_on_log_grid(
        objective,
        cfg.grid.lower.min(params.p_max),
        params.p_max,
        cfg.grid.points,
        cfg.grid.rel_tol,
    )
}

/// Quantization bucket for the argmax cache: 1% log steps.
fn quantize_1pct(v: f64) -> i32 {
    debug_assert!(v > 0.0);
    (v.ln() / 0.01f64.ln_1p()).round() as i32
}

fn bucket_representative(q: i32) -> f64 {
    (q as f64 * 0.01f64.ln_1p()).exp()
}

/// Adaptive policy: transmit at the cap while the budget is at or below the
/// alert threshold; above it, spend the argmax of the surplus-penalized
/// rate objective.
///
/// Inputs are quantized to 1% log buckets and the argmax is evaluated at the
/// bucket representative, so results are identical whether the cache is
/// enabled or not and independent of call interleaving across threads.
pub struct AdaptivePolicy {
    cfg: AdaptiveConfig,
    cache: Option<RwLock<HashMap<(i32, i32), f64>>>,
}

impl std::fmt::Debug for AdaptivePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdaptivePolicy")
            .field("cfg", &self.cfg)
            .field("cache_enabled", &self.cache.is_some())
            .finish()
    }
}

impl AdaptivePolicy {
    pub fn new(cfg: AdaptiveConfig) -> Result<Self, SkgError> {
        cfg.validate()?;
        Ok(Self { cfg, cache: Some(RwLock::new(HashMap::new())) })
    }

    pub fn without_cache(cfg: AdaptiveConfig) -> Result<Self, SkgError> {
        cfg.validate()?;
        Ok(Self { cfg, cache: None })
    }

    /// Alert budget threshold for the given scenario (quantile of the alert
    /// duration law times the message length). Recomputed per call: cheap
    /// relative to one argmax and keeps the policy a pure function of its
    /// arguments.
    fn threshold(params: &SystemParams) -> f64 {
        poisson_quantile(params.alert_mean, 1.0 - params.eps_tilde)
            .map(|k| k as f64 * params.msg_len)
            .unwrap_or(0.0)
    }
}

/// Adaptive policy with the given hyperparameters (cache enabled).
pub fn adaptive_policy(cfg: AdaptiveConfig) -> Result<AdaptivePolicy, SkgError> {
    AdaptivePolicy::new(cfg)
}

impl PowerPolicy for AdaptivePolicy {
    fn power(&self, _t: usize, budget: f64, gain_bob: f64, _message: bool, params: &SystemParams) -> f64 {
        let delta = budget - Self::threshold(params);
        if delta <= 0.0 {
            return params.p_max;
        }
        if gain_bob < 1e-12 {
            // Flat objective (zero rate at any power): fall back to the cap.
            return params.p_max;
        }
        let qh = quantize_1pct(gain_bob);
        let qd = quantize_1pct(delta);
        if let Some(cache) = &self.cache {
            if let Some(&p) = cache.read().expect("cache lock").get(&(qh, qd)) {
                return p;
            }
        }
        let p = argmax_g(
            bucket_representative(qh),
            bucket_representative(qd),
            &self.cfg,
            params,
        )
        .min(params.p_max);
        if let Some(cache) = &self.cache {
            cache.write().expect("cache lock").insert((qh, qd), p);
        }
        p
    }

    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::Adaptive { weight: self.cfg.weight }
    }
}
