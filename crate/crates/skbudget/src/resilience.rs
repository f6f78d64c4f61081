//! Resilience metrics: the minimum key budget an alert state demands, the
//! alert outage probability of a given store level, the resilience outage
//! probability over time, and its distribution-free bounds.

use std::io::Write;

use crate::budget::BudgetTrajectory;
use crate::error::SkgError;
use crate::numerics::{poisson_pmf_cdf, poisson_quantile};

/// Law of the alert-state duration in slots.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertLaw {
    /// Random duration with the given mean.
    Poisson { mean: f64 },
    /// Deterministic duration (point mass).
    Fixed { slots: u64 },
}

impl AlertLaw {
    /// Smallest duration k with `Pr(T <= k) >= q`.
    pub fn quantile(&self, q: f64) -> Result<u64, SkgError> {
        match *self {
            AlertLaw::Poisson { mean } => poisson_quantile(mean, q),
            AlertLaw::Fixed { slots } => Ok(slots),
        }
    }

    /// `Pr(T <= k)`.
    pub fn cdf(&self, k: u64) -> Result<f64, SkgError> {
        match *self {
            AlertLaw::Poisson { mean } => Ok(poisson_pmf_cdf(mean, k)?.1),
            AlertLaw::Fixed { slots } => Ok(if k >= slots { 1.0 } else { 0.0 }),
        }
    }

    fn validate(&self) -> Result<(), SkgError> {
        if let AlertLaw::Poisson { mean } = *self {
            if !(mean > 0.0) || !mean.is_finite() {
                return Err(SkgError::InvalidParam {
                    name: "alert_mean",
                    message: format!("must be positive and finite, got {mean}"),
                });
            }
        }
        Ok(())
    }
}

/// Alert-outage tolerance and the key threshold it induces.
///
/// Fields are private so `min_budget` can never drift out of sync with the
/// inputs; build a new config to change anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResilienceConfig {
    eps_tilde: f64,
    alert_law: AlertLaw,
    msg_len: f64,
    min_budget: f64,
}

impl ResilienceConfig {
    pub fn new(alert_law: AlertLaw, eps_tilde: f64, msg_len: f64) -> Result<Self, SkgError> {
        alert_law.validate()?;
        if !(eps_tilde > 0.0 && eps_tilde < 1.0) {
            return Err(SkgError::InvalidParam {
                name: "eps_tilde",
                message: format!("must be in (0, 1), got {eps_tilde}"),
            });
        }
        if !(msg_len > 0.0) || !msg_len.is_finite() {
            return Err(SkgError::InvalidParam {
                name: "msg_len",
                message: format!("must be positive and finite, got {msg_len}"),
            });
        }
        let min_budget = alert_law.quantile(1.0 - eps_tilde)? as f64 * msg_len;
        Ok(Self { eps_tilde, alert_law, msg_len, min_budget })
    }

    /// Poisson alert law taken from the scenario parameters.
    pub fn from_params(params: &crate::model::SystemParams) -> Result<Self, SkgError> {
        Self::new(
            AlertLaw::Poisson { mean: params.alert_mean },
            params.eps_tilde,
            params.msg_len,
        )
    }

    pub fn eps_tilde(&self) -> f64 {
        self.eps_tilde
    }

    pub fn alert_law(&self) -> AlertLaw {
        self.alert_law
    }

    pub fn msg_len(&self) -> f64 {
        self.msg_len
    }

    /// Minimum store, in bits, whose alert outage probability stays within
    /// the tolerance: the (1 - eps_tilde) duration quantile times the
    /// per-slot key cost.
    pub fn min_budget(&self) -> f64 {
        self.min_budget
    }

    /// Probability that an alert demands more key bits than `budget`, i.e.
    /// `Pr(T * msg_len > budget)`; 1 outright if the run is already ruined.
    pub fn alert_outage_prob(&self, budget: f64, survived: bool) -> Result<f64, SkgError> {
        if !survived {
            return Ok(1.0);
        }
        let slots = (budget / self.msg_len).floor();
        if slots < 0.0 {
            return Ok(1.0);
        }
        if slots >= u64::MAX as f64 {
            return Ok(0.0);
        }
        Ok(1.0 - self.alert_law.cdf(slots as u64)?)
    }
}

/// Memoized alert-outage lookup keyed by whole alert-message counts; the
/// CDF at each count is computed once, making per-slot aggregation over
/// large campaigns cheap and bit-stable.
#[derive(Debug, Clone)]
pub struct AlertOutageTable {
    cfg: ResilienceConfig,
    cdf_by_count: Vec<f64>,
}

impl AlertOutageTable {
    pub fn new(cfg: &ResilienceConfig) -> Result<Self, SkgError> {
        // Past the 1 - 1e-15 duration quantile the outage probability is
        // numerically zero in the summed CDF.
        let top = cfg.alert_law.quantile(1.0 - 1e-15)? as usize + 1;
        let cdf_by_count = (0..=top as u64)
            .map(|k| cfg.alert_law.cdf(k))
            .collect::<Result<_, _>>()?;
        Ok(Self { cfg: *cfg, cdf_by_count })
    }

    pub fn prob(&self, budget: f64, survived: bool) -> f64 {
        if !survived {
            return 1.0;
        }
        let slots = (budget / self.cfg.msg_len).floor();
        if slots < 0.0 {
            return 1.0;
        }
        if slots >= self.cdf_by_count.len() as f64 {
            return 0.0;
        }
        1.0 - self.cdf_by_count[slots as usize]
    }
}

/// Resilience outage fraction per slot: share of runs that are ruined by t
/// or hold fewer than `min_budget` bits at t. By the threshold construction
/// this equals the share whose alert outage probability exceeds the
/// tolerance.
pub fn resilience_outage_mc(
    trajectories: &[BudgetTrajectory],
    cfg: &ResilienceConfig,
) -> Result<Vec<f64>, SkgError> {
    let horizon = common_horizon(trajectories)?;
    let threshold = cfg.min_budget();
    let n = trajectories.len() as f64;
    Ok((0..=horizon)
        .map(|t| {
            let outages = trajectories
                .iter()
                .filter(|traj| !traj.alive_at(t) || traj.budgets[t] < threshold)
                .count();
            outages as f64 / n
        })
        .collect())
}

/// Empirical probability, per slot, that the accumulated net usage leaves
/// at least `min_budget` bits in the store. The raw walk is used (no ruin
/// flooring): this is the survival function of the usage sum that the
/// outage bounds combine with the ruin probability.
pub fn usage_survival_mc(
    trajectories: &[BudgetTrajectory],
    cfg: &ResilienceConfig,
) -> Result<Vec<f64>, SkgError> {
    let horizon = common_horizon(trajectories)?;
    let threshold = cfg.min_budget();
    let n = trajectories.len() as f64;
    Ok((0..=horizon)
        .map(|t| {
            let held = trajectories.iter().filter(|traj| traj.budgets[t] >= threshold).count();
            held as f64 / n
        })
        .collect())
}

fn common_horizon(trajectories: &[BudgetTrajectory]) -> Result<usize, SkgError> {
    trajectories
        .iter()
        .map(BudgetTrajectory::horizon)
        .min()
        .ok_or_else(|| SkgError::InvalidParam {
            name: "trajectories",
            message: "at least one trajectory is required".into(),
        })
}

/// Two-sided envelope on the resilience outage probability at one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub t: usize,
}

/// Distribution-free bounds on the resilience outage probability from the
/// marginals of the usage sum and the ruin event:
/// `1 - min(F_S, 1 - psi) <= alpha(t) <= 1 - max(F_S - psi, 0)`,
/// where `F_S` is the usage survival probability at t and `psi` the ruin
/// probability by t.
pub fn outage_bounds(f_s: f64, psi: f64, t: usize) -> BoundPair {
    let f_s = f_s.clamp(0.0, 1.0);
    let psi = psi.clamp(0.0, 1.0);
    let lower = (1.0 - f_s.min(1.0 - psi)).clamp(0.0, 1.0);
    let upper = (1.0 - (f_s - psi).max(0.0)).clamp(lower, 1.0);
    BoundPair { lower, upper, t }
}

/// Write outage series as CSV:
/// `t,alpha,alpha_lower_bound,alpha_upper_bound,psi_t`.
pub fn write_outage_csv<W: Write>(
    alpha: &[f64],
    bounds: &[BoundPair],
    psi: &[f64],
    mut w: W,
) -> Result<(), SkgError> {
    if alpha.len() != bounds.len() || alpha.len() != psi.len() {
        return Err(SkgError::InvalidParam {
            name: "series",
            message: format!(
                "column lengths differ: alpha {}, bounds {}, psi {}",
                alpha.len(),
                bounds.len(),
                psi.len()
            ),
        });
    }
    writeln!(w, "t,alpha,alpha_lower_bound,alpha_upper_bound,psi_t")?;
    for (t, ((a, b), p)) in alpha.iter().zip(bounds).zip(psi).enumerate() {
        writeln!(w, "{t},{a},{},{},{p}", b.lower, b.upper)?;
    }
    Ok(())
}
