//! Simulator and numerical toolkit for wireless links that spend a secret-key
//! budget: messages consume stored key bits, idle slots replenish the store by
//! running secret-key generation (SKG) against a passive eavesdropper.
//!
//! The crate provides
//!
//! * the slot-level budget process (message arrivals, fading draws, key usage)
//!   and Monte Carlo campaign machinery ([`budget`], [`harness`]),
//! * closed-form and quadrature evaluations of SKG rates ([`model`]),
//! * finite-horizon and ultimate ruin probabilities of the budget walk via a
//!   discretized renewal recursion ([`ruin`]),
//! * resilience metrics: minimum alert budget, alert outage probability, the
//!   empirical outage fraction and its analytical sandwich bounds
//!   ([`resilience`]),
//! * power-allocation policies (constant, budget-balancing, adaptive
//!   rate-per-power-cost maximization) and a small reinforcement-learning
//!   stack (environment + REINFORCE trainer) for learned policies
//!   ([`policy`], [`rl`]),
//! * deterministic experiment configs, CSV reports and figure reproduction
//!   ([`harness`]).
//!
//! Everything downstream of a `(master_seed, stream_index)` pair is
//! deterministic; campaign outputs are byte-identical for a fixed config and
//! seed regardless of worker count.

pub mod budget;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod policy;
pub mod resilience;
pub mod rl;
pub mod ruin;

pub use error::SkgError;
