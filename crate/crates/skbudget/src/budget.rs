//! The secret-key budget random walk: per-slot usage, full-horizon
//! trajectory simulation under any power policy, first-passage (ruin)
//! detection, and alert-state survival draws.

use std::io::Write;

use crate::error::SkgError;
use crate::model::{sample_channel, skg_rate, SnrPair, SystemParams};
use crate::numerics::{NeumaierSum, RandomStream};
use crate::policy::PowerPolicy;

/// What happened in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub message_sent: bool,
    /// Net key usage in bits: `+msg_len` on message slots, `-skg_rate` on
    /// SKG slots (nonpositive).
    pub usage: f64,
    /// Transmit power commanded on SKG slots; 0 on message slots (no SKG
    /// transmission happens, the policy is not queried).
    pub power_used: f64,
    /// Legitimate channel gain on SKG slots; 0 on message slots (no draw).
    pub gain_bob: f64,
}

/// One simulated run of the budget walk.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetTrajectory {
    /// `budgets[t]` is B(t); index 0 holds the initial budget, so the length
    /// is horizon + 1.
    pub budgets: Vec<f64>,
    /// `outcomes[t-1]` describes slot t (length horizon).
    pub outcomes: Vec<SlotOutcome>,
    /// First slot index with B(t) <= 0, if ruin occurred. The walk continues
    /// past ruin (budgets may go negative) so time-t statistics stay
    /// defined; survival is this flag, not the sign of the current budget.
    pub ruin_time: Option<usize>,
}

impl BudgetTrajectory {
    pub fn horizon(&self) -> usize {
        self.outcomes.len()
    }

    /// True if the run had not hit ruin by slot `t` (inclusive).
    pub fn alive_at(&self, t: usize) -> bool {
        self.ruin_time.map_or(true, |r| r > t)
    }

    /// Budget with ruin made absorbing: once the store empties it stays
    /// empty. This is the physically meaningful store level; the raw
    /// `budgets` walk is what survival-function estimates need.
    pub fn floored_budget_at(&self, t: usize) -> f64 {
        if self.alive_at(t) {
            self.budgets[t]
        } else {
            0.0
        }
    }
}

/// Advance the walk one slot.
///
/// Slot ordering contract (fixed, load-bearing for reproducibility and
/// common-random-number pairing): draw the message Bernoulli first; on
/// message slots consume `msg_len` and touch no other randomness; on SKG
/// slots draw the channel pair, query the policy, and generate key bits.
pub fn step(
    budget: f64,
    params: &SystemParams,
    policy: &dyn PowerPolicy,
    t: usize,
    rng: &mut RandomStream,
) -> Result<SlotOutcome, SkgError> {
    let message = rng.bernoulli(params.p_tx);
    if message {
        return Ok(SlotOutcome {
            message_sent: true,
            usage: params.msg_len,
            power_used: 0.0,
            gain_bob: 0.0,
        });
    }
    let draw = sample_channel(params, rng);
    let power = policy.power(t, budget, draw.gain_bob, false, params);
    if !power.is_finite() || !(0.0..=params.p_max).contains(&power) {
        return Err(SkgError::PolicyContract { slot: t, power, max_power: params.p_max });
    }
    let rate = skg_rate(&SnrPair::new(power, &draw));
    Ok(SlotOutcome {
        message_sent: false,
        usage: -rate,
        power_used: power,
        gain_bob: draw.gain_bob,
    })
}

/// Simulate a full run of `params.horizon` slots.
///
/// The budget identity `B(t) = b0 - sum of usages` holds exactly in the
/// compensated accumulator's arithmetic at every index; recomputing the sum
/// from `outcomes` with a fresh accumulator reproduces `budgets` bit for
/// bit.
pub fn simulate_run(
    params: &SystemParams,
    policy: &dyn PowerPolicy,
    rng: &mut RandomStream,
) -> Result<BudgetTrajectory, SkgError> {
    params.validate()?;
    let mut usage_acc = NeumaierSum::new();
    let mut budgets = Vec::with_capacity(params.horizon + 1);
    let mut outcomes = Vec::with_capacity(params.horizon);
    budgets.push(params.initial_budget);
    let mut ruin_time = None;
    for t in 1..=params.horizon {
        let current = *budgets.last().expect("budgets never empty");
        let outcome = step(current, params, policy, t, rng)?;
        usage_acc.add(outcome.usage);
        let b = params.initial_budget - usage_acc.value();
        budgets.push(b);
        outcomes.push(outcome);
        if ruin_time.is_none() && b <= 0.0 {
            ruin_time = Some(t);
        }
    }
    Ok(BudgetTrajectory { budgets, outcomes, ruin_time })
}

/// How alert survival compares the budget to the alert's key demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertConvention {
    /// Survive iff budget >= T * msg_len: the store covers the T messages of
    /// the alert itself. Makes the quantile threshold exactly sufficient.
    #[default]
    TotalDemand,
    /// Survive iff budget >= (T+1) * msg_len: also counts the message that
    /// triggered the alert. Sensitivity variant behind a config switch.
    StrictPlusOne,
}

/// Draw an alert duration `T` from the Poisson law and report whether the
/// given budget covers it (default convention: `budget >= T * msg_len`).
pub fn alert_survival(
    budget_at_entry: f64,
    params: &SystemParams,
    rng: &mut RandomStream,
) -> bool {
    alert_survival_with(budget_at_entry, params, AlertConvention::TotalDemand, rng)
}

/// [`alert_survival`] under an explicit convention.
pub fn alert_survival_with(
    budget_at_entry: f64,
    params: &SystemParams,
    convention: AlertConvention,
    rng: &mut RandomStream,
) -> bool {
    let t_alert = rng.poisson(params.alert_mean);
    let demand = match convention {
        AlertConvention::TotalDemand => t_alert as f64 * params.msg_len,
        AlertConvention::StrictPlusOne => (t_alert + 1) as f64 * params.msg_len,
    };
    budget_at_entry >= demand
}

/// Write one run as CSV: `t,budget_bits,usage_bits,message,power_linear`.
/// Row 0 is the initial state (zero usage, no message, zero power).
pub fn write_trajectory_csv<W: Write>(traj: &BudgetTrajectory, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,budget_bits,usage_bits,message,power_linear")?;
    writeln!(w, "0,{},0,0,0", traj.budgets[0])?;
    for (i, o) in traj.outcomes.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i + 1,
            traj.budgets[i + 1],
            o.usage,
            u8::from(o.message_sent),
            o.power_used
        )?;
    }
    Ok(())
}
