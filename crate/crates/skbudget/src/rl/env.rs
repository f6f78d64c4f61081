//! Slot environment for learned power control.
//!
//! Wraps the budget walk in an agent loop: the agent observes the upcoming
//! slot (budget, legitimate gain, message flag), commands a power, and
//! receives a reward balancing average power, the running resilience-outage
//! estimate, the instantaneous alert outage probability, and a low-budget
//! penalty. Budget dynamics are bit-identical to the simulator's.

use crate::error::SkgError;
use crate::model::{sample_channel, skg_rate, ChannelDraw, SnrPair, SystemParams};
use crate::numerics::{NeumaierSum, RandomStream};
use crate::resilience::{AlertOutageTable, ResilienceConfig};

/// What the agent sees before choosing a power for the next slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub budget: f64,
    /// Legitimate channel gain of the upcoming slot; 0 on message slots.
    pub gain_bob: f64,
    pub message: bool,
}

/// Reward shaping weights: the first three multiply penalties (normalized
/// average power, log10 of the outage-fraction estimate, log10 of the alert
/// outage probability) and must be negative; the fourth scales the
/// low-budget penalty and must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    w1: f64,
    w2: f64,
    w3: f64,
    w4: f64,
    message_slot_reward: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { w1: -50.0, w2: -10.0, w3: -1.0, w4: 10.0, message_slot_reward: 1.0 }
    }
}

impl RewardWeights {
    pub fn new(
        w1: f64,
        w2: f64,
        w3: f64,
        w4: f64,
        message_slot_reward: f64,
    ) -> Result<Self, SkgError> {
        let all = [w1, w2, w3, w4, message_slot_reward];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SkgError::InvalidParam {
                name: "reward_weights",
                message: format!("weights must be finite, got {all:?}"),
            });
        }
        if !(w1 < 0.0 && w2 < 0.0 && w3 < 0.0) {
            return Err(SkgError::InvalidParam {
                name: "reward_weights",
                message: format!("w1, w2, w3 must be negative, got ({w1}, {w2}, {w3})"),
            });
        }
        if !(w4 > 0.0) {
            return Err(SkgError::InvalidParam {
                name: "reward_weights",
                message: format!("w4 must be positive, got {w4}"),
            });
        }
        if !(message_slot_reward > 0.0) {
            return Err(SkgError::InvalidParam {
                name: "reward_weights",
                message: format!(
                    "message_slot_reward must be positive, got {message_slot_reward}"
                ),
            });
        }
        Ok(Self { w1, w2, w3, w4, message_slot_reward })
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn w3(&self) -> f64 {
        self.w3
    }

    pub fn w4(&self) -> f64 {
        self.w4
    }

    pub fn message_slot_reward(&self) -> f64 {
        self.message_slot_reward
    }
}

/// Reward on an SKG slot, as a pure function of the post-step statistics.
///
/// `avg_power / p_max` is the normalized running mean of commanded powers,
/// `alpha_est` the running outage fraction (already floored by the caller),
/// `eps` the alert outage probability (already floored), and the last term
/// penalizes budgets under the alert threshold. An empty store zeroes the
/// last term (the threshold ratio loses meaning at B <= 0); the ruin
/// penalty arrives through `eps = 1` and the outage fraction instead.
pub fn reward_from_stats(
    weights: &RewardWeights,
    avg_power: f64,
    p_max: f64,
    alpha_est: f64,
    eps: f64,
    budget: f64,
    min_budget: f64,
) -> f64 {
    let low_budget = if budget > 0.0 {
        (1.0 - min_budget / budget).min(0.0)
    } else {
        0.0
    };
    weights.w1 * (avg_power / p_max)
        + weights.w2 * alpha_est.log10()
        + weights.w3 * eps.log10()
        + weights.w4 * low_budget
}

/// The upcoming slot, drawn before the agent acts.
#[derive(Debug, Clone, Copy)]
struct Pending {
    message: bool,
    draw: ChannelDraw,
}

/// Budget-walk environment with per-episode streams.
#[derive(Debug, Clone)]
pub struct SkgEnv {
    params: SystemParams,
    weights: RewardWeights,
    outage_table: AlertOutageTable,
    min_budget: f64,
    rng: RandomStream,
    t: usize,
    usage_acc: NeumaierSum,
    budget: f64,
    power_acc: NeumaierSum,
    outage_slots: usize,
    alive: bool,
    pending: Option<Pending>,
    clamp_count: usize,
}

impl SkgEnv {
    /// Build the environment and draw the first observation.
    pub fn new(
        params: &SystemParams,
        weights: &RewardWeights,
        rng: RandomStream,
    ) -> Result<(Self, Observation), SkgError> {
        params.validate()?;
        let cfg = ResilienceConfig::from_params(params)?;
        let outage_table = AlertOutageTable::new(&cfg)?;
        let mut env = Self {
            params: *params,
            weights: *weights,
            outage_table,
            min_budget: cfg.min_budget(),
            rng,
            t: 0,
            usage_acc: NeumaierSum::new(),
            budget: params.initial_budget,
            power_acc: NeumaierSum::new(),
            outage_slots: 0,
            alive: true,
            pending: None,
            clamp_count: 0,
        };
        let obs = env.start();
        Ok((env, obs))
    }

    /// Re-zero the state on a fresh stream and draw the first observation.
    pub fn reset(&mut self, rng: RandomStream) -> Observation {
        self.rng = rng;
        self.t = 0;
        self.usage_acc = NeumaierSum::new();
        self.budget = self.params.initial_budget;
        self.power_acc = NeumaierSum::new();
        self.outage_slots = 0;
        self.alive = true;
        self.pending = None;
        self.clamp_count = 0;
        self.start()
    }

    fn start(&mut self) -> Observation {
        self.pending = Some(self.draw_slot());
        self.observation()
    }

    /// Message flag first; channel gains only on SKG slots. The consumption
    /// order matches the simulator's slot loop exactly.
    fn draw_slot(&mut self) -> Pending {
        let message = self.rng.bernoulli(self.params.p_tx);
        let draw = if message {
            ChannelDraw { gain_bob: 0.0, gain_eve: 0.0 }
        } else {
            sample_channel(&self.params, &mut self.rng)
        };
        Pending { message, draw }
    }

    fn observation(&self) -> Observation {
        match &self.pending {
            Some(p) => Observation {
                budget: self.budget,
                gain_bob: p.draw.gain_bob,
                message: p.message,
            },
            None => Observation { budget: self.budget, gain_bob: 0.0, message: false },
        }
    }

    /// Advance one slot. The action is clamped into `[0, p_max]` (warned
    /// once per episode); the reward is evaluated at the post-step state.
    /// Ruin never terminates the episode, only the horizon does; stepping a
    /// finished episode is a no-op returning `done`.
    pub fn step(&mut self, action: f64) -> (Observation, f64, bool) {
        let Some(pending) = self.pending.take() else {
            return (self.observation(), 0.0, true);
        };
        let power = self.clamp(action);
        let usage = if pending.message {
            self.params.msg_len
        } else {
            -skg_rate(&SnrPair::new(power, &pending.draw))
        };
        self.usage_acc.add(usage);
        self.budget = self.params.initial_budget - self.usage_acc.value();
        self.t += 1;
        if self.alive && self.budget <= 0.0 {
            self.alive = false;
        }
        if !self.alive || self.budget < self.min_budget {
            self.outage_slots += 1;
        }
        // Average power runs over every commanded slot, messages included.
        self.power_acc.add(power);
        let reward = if pending.message {
            self.weights.message_slot_reward
        } else {
            reward_from_stats(
                &self.weights,
                self.avg_power(),
                self.params.p_max,
                self.alpha_estimate(),
                self.eps_current(),
                self.budget,
                self.min_budget,
            )
        };
        let done = self.t == self.params.horizon;
        if !done {
            self.pending = Some(self.draw_slot());
        }
        (self.observation(), reward, done)
    }

    fn clamp(&mut self, action: f64) -> f64 {
        let power = if action.is_finite() { action.clamp(0.0, self.params.p_max) } else { 0.0 };
        if power.to_bits() != action.to_bits() {
            if self.clamp_count == 0 {
                eprintln!(
                    "warning: action {action} outside [0, {}], clamped to {power}",
                    self.params.p_max
                );
            }
            self.clamp_count += 1;
        }
        power
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn alive(&self) -> bool {
        self.alive
    }

    pub fn min_budget(&self) -> f64 {
        self.min_budget
    }

    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    /// Running mean of commanded powers over elapsed slots; 0 before the
    /// first step.
    pub fn avg_power(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.power_acc.value() / self.t as f64
        }
    }

    /// Running resilience-outage fraction, floored at `1/t` so its log
    /// stays finite; 0 before the first step.
    pub fn alpha_estimate(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            (self.outage_slots as f64 / self.t as f64).max(1.0 / self.t as f64)
        }
    }

    /// Alert outage probability of the current state, floored away from 0
    /// so its log stays finite.
    pub fn eps_current(&self) -> f64 {
        self.outage_table.prob(self.budget, self.alive).max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::simulate_run;
    use crate::policy::constant_policy;

    fn env_at(seed: u64, stream: u64) -> (SkgEnv, Observation) {
        SkgEnv::new(&SystemParams::default(), &RewardWeights::default(), RandomStream::new(seed, stream))
            .unwrap()
    }

    fn seed_with_first_message(want: bool) -> u64 {
        (0..1000u64)
            .find(|&s| RandomStream::new(s, 0).bernoulli(0.35) == want)
            .expect("both slot kinds occur in 1000 seeds")
    }

    #[test]
    fn weight_signs_are_enforced() {
        assert!(RewardWeights::new(-50.0, -10.0, -1.0, 10.0, 1.0).is_ok());
        assert!(RewardWeights::new(50.0, -10.0, -1.0, 10.0, 1.0).is_err());
        assert!(RewardWeights::new(-50.0, 10.0, -1.0, 10.0, 1.0).is_err());
        assert!(RewardWeights::new(-50.0, -10.0, 1.0, 10.0, 1.0).is_err());
        assert!(RewardWeights::new(-50.0, -10.0, -1.0, -10.0, 1.0).is_err());
        assert!(RewardWeights::new(-50.0, -10.0, -1.0, 10.0, 0.0).is_err());
        assert!(RewardWeights::new(f64::NAN, -10.0, -1.0, 10.0, 1.0).is_err());
        assert_eq!(
            RewardWeights::default(),
            RewardWeights::new(-50.0, -10.0, -1.0, 10.0, 1.0).unwrap()
        );
    }

    #[test]
    fn reference_reward_arithmetic() {
        let w = RewardWeights::default();
        // Half the power cap, alpha 0.1, eps 0.01, comfortable budget:
        // -25 + 10 + 2 + 0.
        let r = reward_from_stats(&w, 500.0, 1000.0, 0.1, 0.01, 100.0, 40.0);
        assert!((r + 13.0).abs() < 1e-12, "reward {r}");
        // Dropping the budget to half the threshold adds 10 * (1 - 40/20).
        let low = reward_from_stats(&w, 500.0, 1000.0, 0.1, 0.01, 20.0, 40.0);
        assert!((low - (r - 10.0)).abs() < 1e-12, "low-budget reward {low}");
        // At or below zero the threshold term vanishes.
        for b in [0.0, -5.0] {
            let drained = reward_from_stats(&w, 500.0, 1000.0, 0.1, 0.01, b, 40.0);
            assert_eq!(drained.to_bits(), r.to_bits());
        }
    }

    #[test]
    fn reset_contract() {
        let (_, obs) = env_at(9, 0);
        assert_eq!(obs.budget, 70.0);
        let (_, again) = env_at(9, 0);
        assert_eq!(obs, again);
        // Marginal message frequency across resets matches the traffic law.
        let n = 10_000;
        let messages = (0..n).filter(|&i| env_at(10, i as u64).1.message).count();
        let freq = messages as f64 / n as f64;
        assert!((freq - 0.35).abs() < 0.02, "message frequency {freq}");
    }

    #[test]
    fn message_reward_ignores_action() {
        let seed = seed_with_first_message(true);
        let mut action = RandomStream::new(1234, 0);
        for _ in 0..100 {
            let (mut env, obs) = env_at(seed, 0);
            assert!(obs.message);
            assert_eq!(obs.gain_bob, 0.0);
            let a = action.uniform() * 1000.0;
            let (_, reward, _) = env.step(a);
            assert_eq!(reward, 1.0);
        }
    }

    #[test]
    fn budget_dynamics_match_simulator_bit_for_bit() {
        let mut params = SystemParams::default();
        params.horizon = 600;
        let power = 10.0;
        let policy = constant_policy(power, &params).unwrap();
        let mut sim_rng = RandomStream::new(31, 4);
        let reference = simulate_run(&params, &policy, &mut sim_rng).unwrap();
        let (mut env, _) =
            SkgEnv::new(&params, &RewardWeights::default(), RandomStream::new(31, 4)).unwrap();
        let mut ruin_seen = None;
        for t in 1..=params.horizon {
            let (_, _, done) = env.step(power);
            assert_eq!(
                env.budget().to_bits(),
                reference.budgets[t].to_bits(),
                "budget diverged at slot {t}"
            );
            if ruin_seen.is_none() && !env.alive() {
                ruin_seen = Some(t);
            }
            assert_eq!(done, t == params.horizon);
        }
        assert_eq!(ruin_seen, reference.ruin_time);
    }

    #[test]
    fn reward_accounting_identity() {
        let mut params = SystemParams::default();
        params.horizon = 300;
        params.initial_budget = 45.0; // keeps all four terms active early
        let weights = RewardWeights::default();
        let (mut env, first) =
            SkgEnv::new(&params, &weights, RandomStream::new(77, 0)).unwrap();
        let cfg = ResilienceConfig::from_params(&params).unwrap();
        let table = AlertOutageTable::new(&cfg).unwrap();
        // Independent mirrors of the running statistics.
        let mut power_acc = NeumaierSum::new();
        let mut outages = 0usize;
        let mut alive = true;
        let mut action_rng = RandomStream::new(78, 0);
        let mut obs = first;
        for t in 1..=params.horizon {
            // Deliberately includes out-of-range actions.
            let raw = action_rng.uniform() * 1500.0 - 100.0;
            let was_message = obs.message;
            let (next, reward, _) = env.step(raw);
            let clamped = raw.clamp(0.0, params.p_max);
            power_acc.add(clamped);
            if alive && env.budget() <= 0.0 {
                alive = false;
            }
            if !alive || env.budget() < cfg.min_budget() {
                outages += 1;
            }
            let expected = if was_message {
                weights.message_slot_reward()
            } else {
                reward_from_stats(
                    &weights,
                    power_acc.value() / t as f64,
                    params.p_max,
                    (outages as f64 / t as f64).max(1.0 / t as f64),
                    table.prob(env.budget(), alive).max(f64::MIN_POSITIVE),
                    env.budget(),
                    cfg.min_budget(),
                )
            };
            assert_eq!(
                reward.to_bits(),
                expected.to_bits(),
                "accounting mismatch at slot {t}: {reward} vs {expected}"
            );
            obs = next;
        }
        assert!(env.clamp_count() > 0, "the action range should have been exercised");
    }

    #[test]
    fn clamping_preserves_dynamics() {
        let seed = seed_with_first_message(false);
        let (mut wild, _) = env_at(seed, 0);
        let (mut tame, _) = env_at(seed, 0);
        wild.step(5000.0);
        tame.step(1000.0);
        assert_eq!(wild.budget().to_bits(), tame.budget().to_bits());
        assert_eq!(wild.clamp_count(), 1);
        assert_eq!(tame.clamp_count(), 0);
        wild.step(-3.0);
        tame.step(0.0);
        assert_eq!(wild.budget().to_bits(), tame.budget().to_bits());
        assert_eq!(wild.clamp_count(), 2);
        let (mut nan_env, _) = env_at(seed, 0);
        nan_env.step(f64::NAN);
        let (mut zero_env, _) = env_at(seed, 0);
        zero_env.step(0.0);
        assert_eq!(nan_env.budget().to_bits(), zero_env.budget().to_bits());
    }

    #[test]
    fn ruin_flags_but_does_not_terminate() {
        let params = SystemParams {
            p_tx: 0.95,
            initial_budget: 12.0,
            horizon: 200,
            ..Default::default()
        };
        let (mut env, _) =
            SkgEnv::new(&params, &RewardWeights::default(), RandomStream::new(5, 0)).unwrap();
        let mut steps = 0;
        loop {
            let (_, _, done) = env.step(10.0);
            steps += 1;
            if done {
                break;
            }
        }
        assert_eq!(steps, 200);
        assert!(!env.alive(), "this traffic load must ruin a 12-bit store");
        assert_eq!(env.eps_current(), 1.0);
        assert!(env.alpha_estimate() > 0.5);
        // Stepping past the horizon is inert.
        let before = env.budget();
        let (obs, reward, done) = env.step(10.0);
        assert!(done);
        assert_eq!(reward, 0.0);
        assert_eq!(obs.budget, before);
        assert_eq!(env.t(), 200);
    }

    #[test]
    fn reset_restores_initial_state_exactly() {
        let (mut env, first) = env_at(21, 3);
        for _ in 0..50 {
            env.step(7.0);
        }
        let obs = env.reset(RandomStream::new(21, 3));
        assert_eq!(obs, first);
        assert_eq!(env.t(), 0);
        assert_eq!(env.avg_power(), 0.0);
        assert_eq!(env.alpha_estimate(), 0.0);
        assert!(env.alive());
        assert_eq!(env.clamp_count(), 0);
    }
}
