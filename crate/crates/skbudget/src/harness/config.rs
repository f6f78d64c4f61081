//! Experiment configuration: TOML sections `[system]`, `[policy]`,
//! `[campaign]`, `[rl]`. Power and gain fields carry a `_db` suffix in the
//! file and are converted to linear exactly once, here; everything past
//! this boundary is linear.

use std::path::{Path, PathBuf};

use crate::error::SkgError;
use crate::model::{db_to_linear, SystemParams};
use crate::policy::{
    adaptive_policy, const_budget_policy, constant_policy, max_power_policy, AdaptiveConfig,
    AdaptivePolicy, PolicyDescriptor, PowerPolicy,
};
use crate::rl::{load_policy, RewardWeights, TrainerConfig};

/// Default adaptive exponent weight.
pub const DEFAULT_ADAPTIVE_WEIGHT: f64 = 0.002;

/// Fully resolved experiment description (linear units).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub policy: PolicyDescriptor,
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the library default. Excluded from the
    /// config hash: it must not affect any output byte.
    pub workers: usize,
    /// Output directory; excluded from the config hash likewise.
    pub out_dir: PathBuf,
    /// Count the alert-triggering message against the budget too.
    pub strict_alert: bool,
    /// Memoize the adaptive policy's argmax lookups.
    pub adaptive_cache: bool,
    pub trainer: TrainerConfig,
    pub reward_weights: RewardWeights,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            policy: PolicyDescriptor::Constant { power_db: 10.0 },
            runs: 2000,
            seed: 1,
            workers: 0,
            out_dir: PathBuf::from("out"),
            strict_alert: false,
            adaptive_cache: true,
            trainer: TrainerConfig::default(),
            reward_weights: RewardWeights::default(),
        }
    }
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default)]
    campaign: RawCampaign,
    #[serde(default)]
    rl: RawRl,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    mean_gain_bob_db: Option<f64>,
    mean_gain_eve_db: Option<f64>,
    p_tx: Option<f64>,
    msg_len: Option<f64>,
    initial_budget: Option<f64>,
    eps_tilde: Option<f64>,
    alert_mean: Option<f64>,
    p_max_db: Option<f64>,
    horizon: Option<usize>,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: Option<String>,
    power_db: Option<f64>,
    weight: Option<f64>,
    path: Option<String>,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    runs: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out_dir: Option<String>,
    strict_alert: Option<bool>,
    adaptive_cache: Option<bool>,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRl {
    iterations: Option<usize>,
    episodes_per_iter: Option<usize>,
    learning_rate: Option<f64>,
    sigma: Option<f64>,
    discount: Option<f64>,
    episode_horizon: Option<usize>,
    init_power_db: Option<f64>,
    seed: Option<u64>,
    collapse_threshold: Option<f64>,
    w1: Option<f64>,
    w2: Option<f64>,
    w3: Option<f64>,
    w4: Option<f64>,
    message_slot_reward: Option<f64>,
}

fn config_error(message: String) -> SkgError {
    SkgError::Config(message)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SkgError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| config_error(format!("config parse: {e}")))?;
        let defaults = Self::default();
        let dp = defaults.params;
        let params = SystemParams {
            mean_gain_bob: raw
                .system
                .mean_gain_bob_db
                .map_or(dp.mean_gain_bob, db_to_linear),
            mean_gain_eve: raw
                .system
                .mean_gain_eve_db
                .map_or(dp.mean_gain_eve, db_to_linear),
            p_tx: raw.system.p_tx.unwrap_or(dp.p_tx),
            msg_len: raw.system.msg_len.unwrap_or(dp.msg_len),
            initial_budget: raw.system.initial_budget.unwrap_or(dp.initial_budget),
            eps_tilde: raw.system.eps_tilde.unwrap_or(dp.eps_tilde),
            alert_mean: raw.system.alert_mean.unwrap_or(dp.alert_mean),
            p_max: raw.system.p_max_db.map_or(dp.p_max, db_to_linear),
            horizon: raw.system.horizon.unwrap_or(dp.horizon),
        };
        let policy = match raw.policy.kind.as_deref() {
            None => defaults.policy,
            Some("constant") => PolicyDescriptor::Constant {
                power_db: raw
                    .policy
                    .power_db
                    .ok_or_else(|| config_error("policy kind \"constant\" needs power_db".into()))?,
            },
            Some("max_power") => PolicyDescriptor::MaxPower,
            Some("const_budget") => PolicyDescriptor::ConstBudget,
            Some("adaptive") => PolicyDescriptor::Adaptive {
                weight: raw.policy.weight.unwrap_or(DEFAULT_ADAPTIVE_WEIGHT),
            },
            Some("learned") => PolicyDescriptor::Learned {
                path: raw
                    .policy
                    .path
                    .ok_or_else(|| config_error("policy kind \"learned\" needs path".into()))?,
            },
            Some(other) => {
                return Err(config_error(format!(
                    "unknown policy kind {other:?}; expected constant, max_power, \
                     const_budget, adaptive or learned"
                )))
            }
        };
        let dt = defaults.trainer;
        let trainer = TrainerConfig {
            iterations: raw.rl.iterations.unwrap_or(dt.iterations),
            episodes_per_iter: raw.rl.episodes_per_iter.unwrap_or(dt.episodes_per_iter),
            learning_rate: raw.rl.learning_rate.unwrap_or(dt.learning_rate),
            sigma: raw.rl.sigma.unwrap_or(dt.sigma),
            discount: raw.rl.discount.unwrap_or(dt.discount),
            episode_horizon: raw.rl.episode_horizon.or(dt.episode_horizon),
            init_power_db: raw.rl.init_power_db.unwrap_or(dt.init_power_db),
            seed: raw.rl.seed.unwrap_or(dt.seed),
            collapse_threshold: raw.rl.collapse_threshold.unwrap_or(dt.collapse_threshold),
        };
        let dw = defaults.reward_weights;
        let reward_weights = RewardWeights::new(
            raw.rl.w1.unwrap_or(dw.w1()),
            raw.rl.w2.unwrap_or(dw.w2()),
            raw.rl.w3.unwrap_or(dw.w3()),
            raw.rl.w4.unwrap_or(dw.w4()),
            raw.rl
                .message_slot_reward
                .unwrap_or(dw.message_slot_reward()),
        )?;
        let cfg = Self {
            params,
            policy,
            runs: raw.campaign.runs.unwrap_or(defaults.runs),
            seed: raw.campaign.seed.unwrap_or(defaults.seed),
            workers: raw.campaign.workers.unwrap_or(defaults.workers),
            out_dir: raw
                .campaign
                .out_dir
                .map_or(defaults.out_dir, PathBuf::from),
            strict_alert: raw.campaign.strict_alert.unwrap_or(defaults.strict_alert),
            adaptive_cache: raw
                .campaign
                .adaptive_cache
                .unwrap_or(defaults.adaptive_cache),
            trainer,
            reward_weights,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SkgError> {
        let text = std::fs::read_to_string(path).map_err(|e| SkgError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), SkgError> {
        self.params.validate()?;
        self.trainer.validate()?;
        if self.runs == 0 {
            return Err(config_error("campaign.runs must be at least 1".into()));
        }
        match &self.policy {
            PolicyDescriptor::Constant { power_db } => {
                if !power_db.is_finite() {
                    return Err(config_error(format!(
                        "constant policy power_db must be finite, got {power_db}"
                    )));
                }
            }
            PolicyDescriptor::Adaptive { weight } => {
                if !(weight > &0.0) || !weight.is_finite() {
                    return Err(config_error(format!(
                        "adaptive policy weight must be positive, got {weight}"
                    )));
                }
            }
            PolicyDescriptor::Learned { path } => {
                if path.is_empty() {
                    return Err(config_error("learned policy path is empty".into()));
                }
            }
            PolicyDescriptor::MaxPower | PolicyDescriptor::ConstBudget => {}
        }
        Ok(())
    }

    /// Instantiate the configured policy.
    pub fn build_policy(&self) -> Result<Box<dyn PowerPolicy>, SkgError> {
        Ok(match &self.policy {
            PolicyDescriptor::Constant { power_db } => {
                Box::new(constant_policy(db_to_linear(*power_db), &self.params)?)
            }
            PolicyDescriptor::MaxPower => Box::new(max_power_policy(&self.params)?),
            PolicyDescriptor::ConstBudget => Box::new(const_budget_policy(&self.params)?),
            PolicyDescriptor::Adaptive { weight } => {
                let cfg = AdaptiveConfig { weight: *weight, ..Default::default() };
                Box::new(if self.adaptive_cache {
                    adaptive_policy(cfg)?
                } else {
                    AdaptivePolicy::without_cache(cfg)?
                })
            }
            PolicyDescriptor::Learned { path } => Box::new(load_policy(Path::new(path))?),
        })
    }

    /// The constant transmit power this policy commands on every SKG slot,
    /// if it is a constant-power kind. Ruin-theory columns exist only for
    /// these.
    pub fn constant_power(&self) -> Result<Option<f64>, SkgError> {
        Ok(match &self.policy {
            PolicyDescriptor::Constant { power_db } => Some(db_to_linear(*power_db)),
            PolicyDescriptor::MaxPower => Some(self.params.p_max),
            PolicyDescriptor::ConstBudget => {
                Some(crate::policy::const_budget_power(&self.params)?)
            }
            PolicyDescriptor::Adaptive { .. } | PolicyDescriptor::Learned { .. } => None,
        })
    }

    /// FNV-1a 64 hash of every semantically relevant field (worker count
    /// and output directory excluded). This is provenance, not crypto.
    pub fn hash(&self) -> u64 {
        fnv1a64(self.canonical_string().as_bytes())
    }

    fn canonical_string(&self) -> String {
        let p = &self.params;
        let policy = match &self.policy {
            PolicyDescriptor::Constant { power_db } => format!("constant:{power_db}"),
            PolicyDescriptor::MaxPower => "max_power".into(),
            PolicyDescriptor::ConstBudget => "const_budget".into(),
            PolicyDescriptor::Adaptive { weight } => format!("adaptive:{weight}"),
            PolicyDescriptor::Learned { path } => format!("learned:{path}"),
        };
        let t = &self.trainer;
        let w = &self.reward_weights;
        format!(
            "mean_gain_bob={}\nmean_gain_eve={}\np_tx={}\nmsg_len={}\ninitial_budget={}\n\
             eps_tilde={}\nalert_mean={}\np_max={}\nhorizon={}\npolicy={}\nruns={}\nseed={}\n\
             strict_alert={}\nadaptive_cache={}\nrl_iterations={}\nrl_episodes={}\nrl_lr={}\n\
             rl_sigma={}\nrl_discount={}\nrl_horizon={:?}\nrl_init={}\nrl_seed={}\n\
             rl_collapse={}\nrl_w=({},{},{},{},{})\n",
            p.mean_gain_bob,
            p.mean_gain_eve,
            p.p_tx,
            p.msg_len,
            p.initial_budget,
            p.eps_tilde,
            p.alert_mean,
            p.p_max,
            p.horizon,
            policy,
            self.runs,
            self.seed,
            self.strict_alert,
            self.adaptive_cache,
            t.iterations,
            t.episodes_per_iter,
            t.learning_rate,
            t.sigma,
            t.discount,
            t.episode_horizon,
            t.init_power_db,
            t.seed,
            t.collapse_threshold,
            w.w1(),
            w.w2(),
            w.w3(),
            w.w4(),
            w.message_slot_reward(),
        )
    }
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
