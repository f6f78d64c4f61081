//! Experiment harness: configuration, Monte Carlo campaigns, power sweeps,
//! figure reproduction and CSV artifacts.
//!
//! Everything here is deterministic in the config: per-run streams are
//! `(seed, run_index)`, aggregation merges run results in index order, and
//! floats print in shortest round-trip form, so re-running a config on any
//! worker count reproduces artifacts byte for byte.

pub mod campaign;
pub mod config;
pub mod csvio;

pub use campaign::{
    reproduce_figures, run_campaign, sweep_power, FigureSelector, PowerSweep, PowerSweepRow,
    ResilienceReport, QUANTILE_LEVELS,
};
pub use config::{fnv1a64, ExperimentConfig, DEFAULT_ADAPTIVE_WEIGHT};
pub use csvio::{read_table, write_table, CsvTable, Provenance};
