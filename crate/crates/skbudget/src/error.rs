//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by numerical routines, the simulator and the harness.
#[derive(Debug, Error)]
pub enum SkgError {
    /// An argument is outside the mathematical domain of the routine.
    #[error("domain error in {routine}: {message}")]
    Domain { routine: &'static str, message: String },

    /// A parameter fails its validity contract (sign, range, relation).
    #[error("invalid parameter {name}: {message}")]
    InvalidParam { name: &'static str, message: String },

    /// An iterative routine exhausted its budget before reaching tolerance.
    #[error("{routine} did not converge: {message}")]
    NonConvergence { routine: &'static str, message: String },

    /// The ruin grid cap retained visible probability mass.
    #[error("ruin grid cap too small: psi at cap = {psi_at_cap:.3e} exceeds {limit:.1e}")]
    CapTooSmall { psi_at_cap: f64, limit: f64 },

    /// No power in the admissible range meets the requested target.
    #[error("target unachievable in {routine}: {message}")]
    UnachievableTarget { routine: &'static str, message: String },

    /// A policy returned a power outside [0, max_power].
    #[error("policy contract violation at slot {slot}: power {power} outside [0, {max_power}]")]
    PolicyContract { slot: usize, power: f64, max_power: f64 },

    /// Training diverged (non-finite statistics or collapsing returns).
    #[error("training diverged at iteration {iteration}: {message}")]
    TrainingDiverged { iteration: usize, message: String },

    /// Configuration file or value errors.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed artifact file (report CSV, policy file).
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SkgError {
    /// True for errors that mean "the numerics did not settle", as opposed to
    /// bad input or IO. The CLI maps these to a dedicated exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SkgError::NonConvergence { .. }
                | SkgError::CapTooSmall { .. }
                | SkgError::TrainingDiverged { .. }
        )
    }
}
