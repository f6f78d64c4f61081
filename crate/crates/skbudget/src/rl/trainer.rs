//! Policy-gradient trainer: episodic REINFORCE with a time-dependent batch
//! baseline over a Gaussian policy in log-power space. Deterministic for a
//! fixed seed and config; episode k draws its environment from stream 2k
//! and its exploration noise from stream 2k + 1.

use std::io::Write;

use crate::error::SkgError;
use crate::model::{db_to_linear, linear_to_db, SystemParams};
use crate::numerics::RandomStream;
use crate::rl::env::{RewardWeights, SkgEnv};
use crate::rl::{alert_threshold, features, LearnedPolicy, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerConfig {
    /// Gradient updates to perform.
    pub iterations: usize,
    /// Episodes collected per update.
    pub episodes_per_iter: usize,
    pub learning_rate: f64,
    /// Exploration standard deviation in log-power space.
    pub sigma: f64,
    /// Return discount per slot.
    pub discount: f64,
    /// Episode length; `None` uses the scenario horizon. Training episodes
    /// shorter than the evaluation horizon keep the alert outage term in
    /// its informative range and cut collection cost.
    pub episode_horizon: Option<usize>,
    /// Power commanded by the zero-feature initialization.
    pub init_power_db: f64,
    pub seed: u64,
    /// Mean episode return under which training is declared collapsed.
    pub collapse_threshold: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            iterations: 60,
            episodes_per_iter: 16,
            learning_rate: 2e-3,
            sigma: 0.6,
            discount: 0.99,
            episode_horizon: Some(400),
            init_power_db: 5.0,
            seed: 0x7261696e,
            collapse_threshold: -1e9,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), SkgError> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("sigma", self.sigma),
            ("discount", self.discount),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SkgError::InvalidParam {
                    name: match name {
                        "learning_rate" => "learning_rate",
                        "sigma" => "sigma",
                        _ => "discount",
                    },
                    message: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.discount > 1.0 {
            return Err(SkgError::InvalidParam {
                name: "discount",
                message: format!("must be at most 1, got {}", self.discount),
            });
        }
        if self.episodes_per_iter == 0 {
            return Err(SkgError::InvalidParam {
                name: "episodes_per_iter",
                message: "must be at least 1".into(),
            });
        }
        if self.episode_horizon == Some(0) {
            return Err(SkgError::InvalidParam {
                name: "episode_horizon",
                message: "must be at least 1 slot when set".into(),
            });
        }
        if !self.init_power_db.is_finite() {
            return Err(SkgError::InvalidParam {
                name: "init_power_db",
                message: format!("must be finite, got {}", self.init_power_db),
            });
        }
        Ok(())
    }
}

/// One line of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRow {
    pub iteration: usize,
    pub mean_return: f64,
    pub mean_power_db: f64,
    pub alpha_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub policy: LearnedPolicy,
    pub log: Vec<TrainingRow>,
}

struct Episode {
    phis: Vec<[f64; FEATURE_COUNT]>,
    noises: Vec<f64>,
    rewards: Vec<f64>,
    avg_power: f64,
    alpha_estimate: f64,
}

fn collect_episode(
    env: &mut SkgEnv,
    first: crate::rl::Observation,
    theta: &[f64; FEATURE_COUNT],
    cfg: &TrainerConfig,
    params: &SystemParams,
    min_budget: f64,
    noise: &mut RandomStream,
) -> Episode {
    let horizon = params.horizon;
    let mut ep = Episode {
        phis: Vec::with_capacity(horizon),
        noises: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        avg_power: 0.0,
        alpha_estimate: 0.0,
    };
    let mut obs = first;
    loop {
        let phi = features(obs.budget, obs.gain_bob, obs.message, params, min_budget);
        let mean: f64 = theta.iter().zip(phi).map(|(w, x)| w * x).sum();
        let z = noise.standard_normal();
        // Pre-clamped into range so a bold exploration draw is a capped
        // transmission, not a contract violation.
        let action = (mean + cfg.sigma * z).exp().min(params.p_max);
        let (next, reward, done) = env.step(action);
        ep.phis.push(phi);
        ep.noises.push(z);
        ep.rewards.push(reward);
        obs = next;
        if done {
            break;
        }
    }
    ep.avg_power = env.avg_power();
    ep.alpha_estimate = env.alpha_estimate();
    ep
}

/// Train a power policy against the environment reward.
///
/// Returns the deterministic mean-action policy and the per-iteration
/// training curve. Fails with a divergence diagnostic if parameters stop
/// being finite or the mean return collapses below the configured floor.
pub fn train_policy(
    params: &SystemParams,
    weights: &RewardWeights,
    cfg: &TrainerConfig,
) -> Result<TrainingOutcome, SkgError> {
    params.validate()?;
    cfg.validate()?;
    let train_params = SystemParams {
        horizon: cfg.episode_horizon.unwrap_or(params.horizon),
        ..*params
    };
    let min_budget = alert_threshold(&train_params);
    let mut theta = [0.0; FEATURE_COUNT];
    theta[0] = db_to_linear(cfg.init_power_db).ln();
    let mut log = Vec::with_capacity(cfg.iterations);
    let mut episode_index = 0u64;
    let mut env: Option<SkgEnv> = None;
    for iteration in 0..cfg.iterations {
        let episodes: Vec<Episode> = (0..cfg.episodes_per_iter)
            .map(|_| {
                let env_stream = RandomStream::new(cfg.seed, 2 * episode_index);
                let noise_stream = RandomStream::new(cfg.seed, 2 * episode_index + 1);
                episode_index += 1;
                let first = match env.as_mut() {
                    Some(e) => e.reset(env_stream),
                    None => {
                        let (e, obs) = SkgEnv::new(&train_params, weights, env_stream)?;
                        env = Some(e);
                        obs
                    }
                };
                let mut noise = noise_stream;
                Ok(collect_episode(
                    env.as_mut().expect("environment initialized above"),
                    first,
                    &theta,
                    cfg,
                    &train_params,
                    min_budget,
                    &mut noise,
                ))
            })
            .collect::<Result<_, SkgError>>()?;

        // Discounted reward-to-go per step.
        let returns: Vec<Vec<f64>> = episodes
            .iter()
            .map(|ep| {
                let mut g = vec![0.0; ep.rewards.len()];
                let mut acc = 0.0;
                for (slot, &r) in ep.rewards.iter().enumerate().rev() {
                    acc = r + cfg.discount * acc;
                    g[slot] = acc;
                }
                g
            })
            .collect();
        let mean_return =
            returns.iter().map(|g| g[0]).sum::<f64>() / cfg.episodes_per_iter as f64;

        // Time-dependent baseline: batch mean of the return at each slot.
        let horizon = returns.iter().map(Vec::len).max().unwrap_or(0);
        let mut baseline = vec![0.0; horizon];
        let mut count = vec![0.0; horizon];
        for g in &returns {
            for (slot, &v) in g.iter().enumerate() {
                baseline[slot] += v;
                count[slot] += 1.0;
            }
        }
        for (b, c) in baseline.iter_mut().zip(&count) {
            *b /= c;
        }

        // Advantages, normalized batch-wide to decouple the step size from
        // the reward scale.
        let mut sq_sum = 0.0f64;
        let mut n_steps = 0.0f64;
        for g in &returns {
            for (slot, &v) in g.iter().enumerate() {
                let a = v - baseline[slot];
                sq_sum += a * a;
                n_steps += 1.0;
            }
        }
        let scale = (sq_sum / n_steps.max(1.0)).sqrt() + 1e-8;

        let mut grad = [0.0; FEATURE_COUNT];
        for (ep, g) in episodes.iter().zip(&returns) {
            for (slot, &v) in g.iter().enumerate() {
                let advantage = (v - baseline[slot]) / scale;
                let score = ep.noises[slot] / cfg.sigma;
                for (gc, &f) in grad.iter_mut().zip(&ep.phis[slot]) {
                    *gc += advantage * score * f;
                }
            }
        }
        for (w, g) in theta.iter_mut().zip(&grad) {
            *w += cfg.learning_rate * g / cfg.episodes_per_iter as f64;
        }

        if theta.iter().any(|v| !v.is_finite()) {
            return Err(SkgError::TrainingDiverged {
                iteration,
                message: format!("policy parameters left the finite range: {theta:?}"),
            });
        }
        if !mean_return.is_finite() || mean_return < cfg.collapse_threshold {
            return Err(SkgError::TrainingDiverged {
                iteration,
                message: format!(
                    "mean return {mean_return} fell below the collapse threshold {}",
                    cfg.collapse_threshold
                ),
            });
        }

        let mean_power = episodes.iter().map(|e| e.avg_power).sum::<f64>()
            / cfg.episodes_per_iter as f64;
        let alpha = episodes.iter().map(|e| e.alpha_estimate).sum::<f64>()
            / cfg.episodes_per_iter as f64;
        log.push(TrainingRow {
            iteration,
            mean_return,
            mean_power_db: linear_to_db(mean_power),
            alpha_estimate: alpha,
        });
    }
    Ok(TrainingOutcome { policy: LearnedPolicy::new(theta, "trained")?, log })
}

/// Write the training curve as CSV:
/// `iteration,mean_return,mean_power_db,alpha_estimate`.
pub fn write_training_csv<W: Write>(rows: &[TrainingRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iteration,mean_return,mean_power_db,alpha_estimate")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.iteration, r.mean_return, r.mean_power_db, r.alpha_estimate
        )?;
    }
    Ok(())
}
