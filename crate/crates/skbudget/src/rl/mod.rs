//! Learning-based power control: a slot environment exposing the budget
//! walk with a resilience-shaped reward, a policy-gradient trainer over a
//! linear Gaussian log-power policy, and the trained-policy adapter into
//! the [`PowerPolicy`](crate::policy::PowerPolicy) contract.

pub mod env;
pub mod trainer;

pub use env::{Observation, RewardWeights, SkgEnv};
pub use trainer::{train_policy, write_training_csv, TrainerConfig, TrainingOutcome, TrainingRow};

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::SkgError;
use crate::model::SystemParams;
use crate::numerics::poisson_quantile;
use crate::policy::{PolicyDescriptor, PowerPolicy};

/// Version line of the policy file format.
const POLICY_FORMAT: &str = "skg-policy v1";

/// Number of observation features (and policy parameters).
pub const FEATURE_COUNT: usize = 4;

/// Observation features for the linear policy: a bias, the budget surplus
/// over the alert threshold in units of the initial budget, the legitimate
/// gain on a log scale normalized by its mean, and the message flag.
pub(crate) fn features(
    budget: f64,
    gain_bob: f64,
    message: bool,
    params: &SystemParams,
    min_budget: f64,
) -> [f64; FEATURE_COUNT] {
    [
        1.0,
        (budget - min_budget) / params.initial_budget,
        gain_bob.ln_1p() / params.mean_gain_bob.ln_1p(),
        f64::from(u8::from(message)),
    ]
}

pub(crate) fn alert_threshold(params: &SystemParams) -> f64 {
    poisson_quantile(params.alert_mean, 1.0 - params.eps_tilde)
        .map(|k| k as f64 * params.msg_len)
        .unwrap_or(0.0)
}

/// Deterministic trained policy: transmit at the exponential of a linear
/// function of the observation features (the mean of the training-time
/// Gaussian), clamped to the power range.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedPolicy {
    theta: [f64; FEATURE_COUNT],
    source: String,
}

impl LearnedPolicy {
    pub fn new(theta: [f64; FEATURE_COUNT], source: impl Into<String>) -> Result<Self, SkgError> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(SkgError::InvalidParam {
                name: "theta",
                message: format!("policy parameters must be finite, got {theta:?}"),
            });
        }
        Ok(Self { theta, source: source.into() })
    }

    pub fn theta(&self) -> [f64; FEATURE_COUNT] {
        self.theta
    }

    /// Mean log-power the policy commands at an observation.
    pub fn mean_log_power(
        &self,
        budget: f64,
        gain_bob: f64,
        message: bool,
        params: &SystemParams,
        min_budget: f64,
    ) -> f64 {
        let phi = features(budget, gain_bob, message, params, min_budget);
        self.theta.iter().zip(phi).map(|(w, x)| w * x).sum()
    }
}

impl PowerPolicy for LearnedPolicy {
    fn power(&self, _t: usize, budget: f64, gain_bob: f64, message: bool, params: &SystemParams) -> f64 {
        let min_budget = alert_threshold(params);
        let u = self.mean_log_power(budget, gain_bob, message, params, min_budget);
        u.exp().clamp(0.0, params.p_max)
    }

    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::Learned { path: self.source.clone() }
    }
}

/// Persist a trained policy: a version line, the parameter count, then one
/// parameter per line with 17 significant digits (lossless for f64).
pub fn save_policy(policy: &LearnedPolicy, path: &Path) -> Result<(), SkgError> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{POLICY_FORMAT}")?;
    writeln!(file, "{}", FEATURE_COUNT)?;
    for v in policy.theta {
        writeln!(file, "{v:.16e}")?;
    }
    Ok(())
}

/// Load a policy saved by [`save_policy`].
pub fn load_policy(path: &Path) -> Result<LearnedPolicy, SkgError> {
    let parse_err = |message: String| SkgError::Parse {
        path: path.display().to_string(),
        message,
    };
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |what: &str| {
        lines
            .next()
            .transpose()
            .map_err(SkgError::from)
            .and_then(|l| l.ok_or_else(|| parse_err(format!("missing {what}"))))
    };
    let header = next("version header")?;
    if header.trim() != POLICY_FORMAT {
        return Err(parse_err(format!(
            "unsupported format {header:?}, expected {POLICY_FORMAT:?}"
        )));
    }
    let count: usize = next("parameter count")?
        .trim()
        .parse()
        .map_err(|e| parse_err(format!("bad parameter count: {e}")))?;
    if count != FEATURE_COUNT {
        return Err(parse_err(format!(
            "expected {FEATURE_COUNT} parameters, file declares {count}"
        )));
    }
    let mut theta = [0.0; FEATURE_COUNT];
    for (i, slot) in theta.iter_mut().enumerate() {
        *slot = next("parameter")?
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad parameter {i}: {e}")))?;
    }
    LearnedPolicy::new(theta, path.display().to_string())
}
