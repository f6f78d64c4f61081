//! Monte Carlo campaign runner and report aggregation.
//!
//! A campaign executes `runs` independent simulations with per-run streams
//! `(seed, 0..runs)`, then aggregates per-slot statistics. Aggregation
//! walks runs in index order with compensated summation, so the report is
//! a pure function of the config: worker count and scheduling cannot move
//! a single bit of the output.

use rayon::prelude::*;

use crate::budget::{simulate_run, BudgetTrajectory};
use crate::error::SkgError;
use crate::model::{db_to_linear, linear_to_db, SystemParams};
use crate::numerics::stream::RandomStream;
use crate::numerics::NeumaierSum;
use crate::policy::{PolicyDescriptor, PowerPolicy};
use crate::resilience::{outage_bounds, AlertOutageTable, ResilienceConfig};
use crate::ruin::{
    critical_probability, expected_usage, finite_time_ruin, finite_time_ruin_series,
    ultimate_ruin, GridSpec,
};

use super::config::ExperimentConfig;
use super::csvio::{cell, read_table, write_table, CsvTable, Provenance};

/// Budget quantile levels reported per slot.
pub const QUANTILE_LEVELS: [f64; 10] =
    [0.03, 0.10, 0.25, 0.30, 0.40, 0.60, 0.70, 0.75, 0.90, 0.97];

const QUANTILE_NAMES: [&str; 10] = [
    "budget_q03",
    "budget_q10",
    "budget_q25",
    "budget_q30",
    "budget_q40",
    "budget_q60",
    "budget_q70",
    "budget_q75",
    "budget_q90",
    "budget_q97",
];

const REPORT_COLUMNS: usize = 19;

fn report_header() -> [&'static str; REPORT_COLUMNS] {
    [
        "t",
        "mean_power_linear",
        "mean_power_db",
        "mean_budget",
        QUANTILE_NAMES[0],
        QUANTILE_NAMES[1],
        QUANTILE_NAMES[2],
        QUANTILE_NAMES[3],
        QUANTILE_NAMES[4],
        QUANTILE_NAMES[5],
        QUANTILE_NAMES[6],
        QUANTILE_NAMES[7],
        QUANTILE_NAMES[8],
        QUANTILE_NAMES[9],
        "alpha",
        "mean_eps",
        "alpha_lower_bound",
        "alpha_upper_bound",
        "psi_t",
    ]
}

/// Aggregated campaign output. Every series has horizon + 1 entries
/// (slot 0 is the initial state). Columns that need a constant transmit
/// power (the ruin series and bounds) hold NaN for adaptive or learned
/// policies, as do the power-specific footer scalars.
#[derive(Debug, Clone)]
pub struct ResilienceReport {
    pub mean_power_linear: Vec<f64>,
    pub mean_power_db: Vec<f64>,
    /// Mean of the ruin-absorbed (floored) budget.
    pub mean_budget: Vec<f64>,
    /// Per-slot floored-budget quantiles at [`QUANTILE_LEVELS`].
    pub budget_quantiles: Vec<[f64; QUANTILE_LEVELS.len()]>,
    /// Resilience outage fraction: ruined by t, or holding less key than
    /// the alert threshold.
    pub alpha: Vec<f64>,
    /// Mean alert outage probability across runs.
    pub mean_eps: Vec<f64>,
    pub alpha_lower: Vec<f64>,
    pub alpha_upper: Vec<f64>,
    pub psi_t: Vec<f64>,
    pub psi_inf: f64,
    pub p_crit: f64,
    pub expected_usage: f64,
    /// Alert budget threshold used for outage decisions (strict convention
    /// shifts it by one message length).
    pub min_budget: f64,
}

impl ResilienceReport {
    pub fn horizon(&self) -> usize {
        self.alpha.len() - 1
    }

    fn columns(&self) -> [&[f64]; 8] {
        [
            &self.mean_power_linear,
            &self.mean_power_db,
            &self.mean_budget,
            &self.alpha,
            &self.mean_eps,
            &self.alpha_lower,
            &self.alpha_upper,
            &self.psi_t,
        ]
    }

    /// Bit-exact equality, treating NaN cells as equal to themselves. This
    /// is the round-trip contract for report CSVs.
    pub fn bits_eq(&self, other: &Self) -> bool {
        let scalars = |r: &Self| {
            [r.psi_inf, r.p_crit, r.expected_usage, r.min_budget].map(f64::to_bits)
        };
        if scalars(self) != scalars(other) {
            return false;
        }
        if self.budget_quantiles.len() != other.budget_quantiles.len() {
            return false;
        }
        let quantiles_eq = self
            .budget_quantiles
            .iter()
            .zip(&other.budget_quantiles)
            .all(|(a, b)| a.map(f64::to_bits) == b.map(f64::to_bits));
        quantiles_eq
            && self.columns().iter().zip(other.columns().iter()).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    pub fn to_csv_string(&self, provenance: Provenance) -> String {
        let footer = format!(
            "footer psi_inf={} p_crit={} expected_usage={} min_budget={}",
            cell(self.psi_inf),
            cell(self.p_crit),
            cell(self.expected_usage),
            cell(self.min_budget)
        );
        let rows: Vec<Vec<f64>> = (0..=self.horizon())
            .map(|t| {
                let mut row = Vec::with_capacity(REPORT_COLUMNS);
                row.push(t as f64);
                row.push(self.mean_power_linear[t]);
                row.push(self.mean_power_db[t]);
                row.push(self.mean_budget[t]);
                row.extend_from_slice(&self.budget_quantiles[t]);
                row.push(self.alpha[t]);
                row.push(self.mean_eps[t]);
                row.push(self.alpha_lower[t]);
                row.push(self.alpha_upper[t]);
                row.push(self.psi_t[t]);
                row
            })
            .collect();
        let mut out = Vec::new();
        write_table(&mut out, provenance, &[footer], &report_header(), &rows)
            .expect("in-memory write cannot fail");
        String::from_utf8(out).expect("CSV output is ASCII")
    }

    pub fn from_csv_str(text: &str, path: &str) -> Result<Self, SkgError> {
        let table = read_table(std::io::BufReader::new(text.as_bytes()), path)?;
        Self::from_table(&table, path)
    }

    fn from_table(table: &CsvTable, path: &str) -> Result<Self, SkgError> {
        let parse_err = |message: String| SkgError::Parse { path: path.to_string(), message };
        if table.header != report_header() {
            return Err(parse_err(format!("unexpected header {:?}", table.header)));
        }
        if table.rows.is_empty() {
            return Err(parse_err("report has no rows".into()));
        }
        let col = |name: &str| table.column_values(name).expect("header checked");
        let footer = |key: &str| -> Result<f64, SkgError> {
            table
                .comment_value(key)
                .ok_or_else(|| parse_err(format!("missing footer value {key}")))?
                .parse()
                .map_err(|_| parse_err(format!("footer value {key} is not a float")))
        };
        let quantiles = table
            .rows
            .iter()
            .map(|row| {
                let mut q = [0.0; QUANTILE_LEVELS.len()];
                q.copy_from_slice(&row[4..4 + QUANTILE_LEVELS.len()]);
                q
            })
            .collect();
        Ok(Self {
            mean_power_linear: col("mean_power_linear"),
            mean_power_db: col("mean_power_db"),
            mean_budget: col("mean_budget"),
            budget_quantiles: quantiles,
            alpha: col("alpha"),
            mean_eps: col("mean_eps"),
            alpha_lower: col("alpha_lower_bound"),
            alpha_upper: col("alpha_upper_bound"),
            psi_t: col("psi_t"),
            psi_inf: footer("psi_inf")?,
            p_crit: footer("p_crit")?,
            expected_usage: footer("expected_usage")?,
            min_budget: footer("min_budget")?,
        })
    }
}

/// Per-run data kept for aggregation; a compacted [`BudgetTrajectory`].
struct RunStat {
    budgets: Vec<f64>,
    ruin_time: Option<usize>,
    power: Vec<f64>,
    message: Vec<bool>,
}

impl RunStat {
    fn from_trajectory(traj: BudgetTrajectory) -> Self {
        Self {
            power: traj.outcomes.iter().map(|o| o.power_used).collect(),
            message: traj.outcomes.iter().map(|o| o.message_sent).collect(),
            budgets: traj.budgets,
            ruin_time: traj.ruin_time,
        }
    }

    fn alive_at(&self, t: usize) -> bool {
        self.ruin_time.map_or(true, |r| r > t)
    }

    fn floored_budget_at(&self, t: usize) -> f64 {
        if self.alive_at(t) {
            self.budgets[t]
        } else {
            0.0
        }
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, SkgError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SkgError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Type-7 (linear interpolation) quantile of an ascending sample.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Grow the grid cap geometrically when the leak check trips. A driftless
/// walk (the budget-balancing power) spreads like sqrt(t) and can overrun
/// the default cap at long horizons, and a barely subcritical drift parks
/// stationary tail mass past it; neither is anyone's input error.
const CAP_GROWTH_RETRIES: usize = 3;

fn with_grown_cap<T>(
    params: &SystemParams,
    mut attempt_at: impl FnMut(&GridSpec) -> Result<T, SkgError>,
) -> Result<T, SkgError> {
    let mut cap = params.initial_budget + 100.0 * params.msg_len;
    for attempt in 0..=CAP_GROWTH_RETRIES {
        let spec = GridSpec { cap: Some(cap), ..GridSpec::default() };
        match attempt_at(&spec) {
            Err(SkgError::CapTooSmall { .. }) if attempt < CAP_GROWTH_RETRIES => cap *= 2.0,
            other => return other,
        }
    }
    unreachable!("loop always returns on its last attempt")
}

fn ruin_series_capped(
    params: &SystemParams,
    power: f64,
    t_max: usize,
) -> Result<Vec<f64>, SkgError> {
    with_grown_cap(params, |spec| finite_time_ruin_series(params, power, t_max, spec))
}

fn ruin_at_capped(params: &SystemParams, power: f64, t: usize) -> Result<f64, SkgError> {
    with_grown_cap(params, |spec| {
        finite_time_ruin(params, power, t, spec).map(|(psi, _)| psi)
    })
}

/// Ultimate ruin with a snap-to-one guard: the budget-balancing power is
/// located by bisection to ~1e-9 drift, and a drift that close to zero is
/// certain ruin mathematically but stalls the value iteration. The snap
/// error for a genuinely negative drift of 1e-6 bits/slot is below 1e-4
/// in probability.
fn ultimate_ruin_guarded(params: &SystemParams, power: f64) -> Result<f64, SkgError> {
    if expected_usage(params, power)? >= -1e-6 {
        return Ok(1.0);
    }
    with_grown_cap(params, |spec| ultimate_ruin(params, power, spec))
}

/// Alert threshold actually used for outage decisions: the strict
/// convention also charges the alert-triggering message, raising the
/// threshold by exactly one message length.
fn effective_min_budget(cfg: &ExperimentConfig, rescfg: &ResilienceConfig) -> f64 {
    if cfg.strict_alert {
        rescfg.min_budget() + cfg.params.msg_len
    } else {
        rescfg.min_budget()
    }
}

struct SlotRow {
    mean_power_linear: f64,
    mean_budget: f64,
    quantiles: [f64; QUANTILE_LEVELS.len()],
    alpha: f64,
    mean_eps: f64,
    usage_survival: f64,
}

fn aggregate_slot(
    t: usize,
    stats: &[RunStat],
    table: &AlertOutageTable,
    min_budget: f64,
    strict_shift: f64,
) -> SlotRow {
    let n = stats.len();
    let mut floored = Vec::with_capacity(n);
    let mut budget_acc = NeumaierSum::new();
    let mut eps_acc = NeumaierSum::new();
    let mut power_acc = NeumaierSum::new();
    let mut skg_count = 0usize;
    let mut outages = 0usize;
    let mut held = 0usize;
    for s in stats {
        let alive = s.alive_at(t);
        let raw = s.budgets[t];
        let fb = s.floored_budget_at(t);
        floored.push(fb);
        budget_acc.add(fb);
        eps_acc.add(table.prob(raw - strict_shift, alive));
        if !alive || raw < min_budget {
            outages += 1;
        }
        if raw >= min_budget {
            held += 1;
        }
        if t >= 1 && !s.message[t - 1] {
            power_acc.add(s.power[t - 1]);
            skg_count += 1;
        }
    }
    floored.sort_unstable_by(|a, b| a.partial_cmp(b).expect("budgets are finite"));
    let mut quantiles = [0.0; QUANTILE_LEVELS.len()];
    for (slot, q) in quantiles.iter_mut().zip(QUANTILE_LEVELS) {
        *slot = quantile_sorted(&floored, q);
    }
    let nf = n as f64;
    SlotRow {
        mean_power_linear: if skg_count > 0 {
            power_acc.value() / skg_count as f64
        } else {
            f64::NAN
        },
        mean_budget: budget_acc.value() / nf,
        quantiles,
        alpha: outages as f64 / nf,
        mean_eps: eps_acc.value() / nf,
        usage_survival: held as f64 / nf,
    }
}

fn simulate_stats(
    cfg: &ExperimentConfig,
    policy: &dyn PowerPolicy,
) -> Result<Vec<RunStat>, SkgError> {
    with_pool(cfg.workers, || {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| {
                let mut rng = RandomStream::new(cfg.seed, r as u64);
                simulate_run(&cfg.params, policy, &mut rng).map(RunStat::from_trajectory)
            })
            .collect::<Result<Vec<_>, _>>()
    })?
}

/// Run one campaign and aggregate it. `with_ruin_columns` lets internal
/// callers that only need MC series skip the grid recursions; the public
/// entry point always fills them.
fn run_campaign_inner(
    cfg: &ExperimentConfig,
    with_ruin_columns: bool,
) -> Result<ResilienceReport, SkgError> {
    cfg.validate()?;
    let policy = cfg.build_policy()?;
    let stats = simulate_stats(cfg, policy.as_ref())?;
    let rescfg = ResilienceConfig::from_params(&cfg.params)?;
    let table = AlertOutageTable::new(&rescfg)?;
    let min_budget = effective_min_budget(cfg, &rescfg);
    let strict_shift = if cfg.strict_alert { cfg.params.msg_len } else { 0.0 };
    let horizon = cfg.params.horizon;

    let rows: Vec<SlotRow> = with_pool(cfg.workers, || {
        (0..=horizon)
            .into_par_iter()
            .map(|t| aggregate_slot(t, &stats, &table, min_budget, strict_shift))
            .collect()
    })?;

    let constant_power = if with_ruin_columns { cfg.constant_power()? } else { None };
    let (psi_t, psi_inf, p_crit, drift) = match constant_power {
        Some(power) => {
            // Tap normalization can leave the grid a few ulps above 1; the
            // report contract pins every probability to [0, 1].
            let mut series = ruin_series_capped(&cfg.params, power, horizon)?;
            for v in &mut series {
                *v = v.clamp(0.0, 1.0);
            }
            (
                series,
                ultimate_ruin_guarded(&cfg.params, power)?.clamp(0.0, 1.0),
                critical_probability(&cfg.params, power)?,
                expected_usage(&cfg.params, power)?,
            )
        }
        None => (vec![f64::NAN; horizon + 1], f64::NAN, f64::NAN, f64::NAN),
    };

    let mut report = ResilienceReport {
        mean_power_linear: Vec::with_capacity(horizon + 1),
        mean_power_db: Vec::with_capacity(horizon + 1),
        mean_budget: Vec::with_capacity(horizon + 1),
        budget_quantiles: Vec::with_capacity(horizon + 1),
        alpha: Vec::with_capacity(horizon + 1),
        mean_eps: Vec::with_capacity(horizon + 1),
        alpha_lower: Vec::with_capacity(horizon + 1),
        alpha_upper: Vec::with_capacity(horizon + 1),
        psi_t,
        psi_inf,
        p_crit,
        expected_usage: drift,
        min_budget,
    };
    for (t, row) in rows.into_iter().enumerate() {
        let psi = report.psi_t[t];
        let (lower, upper) = if psi.is_nan() {
            (f64::NAN, f64::NAN)
        } else {
            let pair = outage_bounds(row.usage_survival, psi, t);
            (pair.lower, pair.upper)
        };
        report.mean_power_db.push(linear_to_db(row.mean_power_linear));
        report.mean_power_linear.push(row.mean_power_linear);
        report.mean_budget.push(row.mean_budget);
        report.budget_quantiles.push(row.quantiles);
        report.alpha.push(row.alpha);
        report.mean_eps.push(row.mean_eps);
        report.alpha_lower.push(lower);
        report.alpha_upper.push(upper);
    }
    Ok(report)
}

/// Execute `cfg.runs` independent runs with streams `(seed, 0..runs)` and
/// aggregate them into a [`ResilienceReport`]. Deterministic for a fixed
/// config regardless of worker count.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<ResilienceReport, SkgError> {
    run_campaign_inner(cfg, true)
}

/// One row of a transmit-power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSweepRow {
    pub power_db: f64,
    /// MC resilience outage fraction at `t_eval`.
    pub alpha: f64,
    /// Grid ruin probability by `t_eval`.
    pub psi_t_eval: f64,
    pub psi_inf: f64,
    pub p_crit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweep {
    pub t_eval: usize,
    pub alpha_target: f64,
    /// Rows in the caller's power order.
    pub rows: Vec<PowerSweepRow>,
    /// Smallest power with ultimate ruin at or below the target, linearly
    /// interpolated between bracketing sweep points; None when even the
    /// largest power misses the target.
    pub min_power_db: Option<f64>,
}

impl PowerSweep {
    pub fn to_csv_string(&self, provenance: Provenance) -> String {
        let note = format!(
            "sweep t_eval={} alpha_target={} min_power_db={}",
            self.t_eval,
            cell(self.alpha_target),
            cell(self.min_power_db.unwrap_or(f64::NAN))
        );
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| vec![r.power_db, r.alpha, r.psi_t_eval, r.psi_inf, r.p_crit])
            .collect();
        let mut out = Vec::new();
        write_table(
            &mut out,
            provenance,
            &[note],
            &["power_db", "alpha", "psi_t_eval", "psi_inf", "p_crit"],
            &rows,
        )
        .expect("in-memory write cannot fail");
        String::from_utf8(out).expect("CSV output is ASCII")
    }
}

/// Interpolate the smallest power meeting `target` on the (power, psi_inf)
/// polyline; assumes psi_inf nonincreasing in power.
fn min_power_for_target(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let first = points.first()?;
    if first.1 <= target {
        return Some(first.0);
    }
    for pair in points.windows(2) {
        let (p0, v0) = pair[0];
        let (p1, v1) = pair[1];
        if v0 >= target && target >= v1 {
            if v0 == v1 {
                return Some(p0);
            }
            return Some(p0 + (v0 - target) / (v0 - v1) * (p1 - p0));
        }
    }
    None
}

/// Evaluate constant-power campaigns over `powers_db`, all with the same
/// master seed (common random numbers), and report the ruin-theory columns
/// per power plus the interpolated minimum power for `alpha_target`.
pub fn sweep_power(
    cfg: &ExperimentConfig,
    powers_db: &[f64],
    t_eval: usize,
    alpha_target: f64,
) -> Result<PowerSweep, SkgError> {
    if powers_db.is_empty() {
        return Err(SkgError::Config("sweep needs at least one power".into()));
    }
    if t_eval == 0 {
        return Err(SkgError::Config("t_eval must be at least 1".into()));
    }
    if !(alpha_target > 0.0 && alpha_target < 1.0) {
        return Err(SkgError::Config(format!(
            "alpha_target must be in (0, 1), got {alpha_target}"
        )));
    }
    for &p_db in powers_db {
        let p = db_to_linear(p_db);
        if !(p > 0.0) || !p.is_finite() || p > cfg.params.p_max {
            return Err(SkgError::Config(format!(
                "sweep power {p_db} dB is outside (0, p_max]"
            )));
        }
    }
    let mut rows = Vec::with_capacity(powers_db.len());
    for &p_db in powers_db {
        let mut point = cfg.clone();
        point.policy = PolicyDescriptor::Constant { power_db: p_db };
        point.params.horizon = t_eval;
        let power = db_to_linear(p_db);
        let report = run_campaign_inner(&point, false)?;
        rows.push(PowerSweepRow {
            power_db: p_db,
            alpha: report.alpha[t_eval],
            psi_t_eval: ruin_at_capped(&point.params, power, t_eval)?,
            psi_inf: ultimate_ruin_guarded(&point.params, power)?,
            p_crit: critical_probability(&point.params, power)?,
        });
    }
    let mut points: Vec<(f64, f64)> = rows.iter().map(|r| (r.power_db, r.psi_inf)).collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("powers are finite"));
    let min_power_db = min_power_for_target(&points, alpha_target);
    Ok(PowerSweep { t_eval, alpha_target, rows, min_power_db })
}

/// Figure selectors for [`reproduce_figures`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureSelector {
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
}

impl std::str::FromStr for FigureSelector {
    type Err = SkgError;

    fn from_str(s: &str) -> Result<Self, SkgError> {
        match s {
            "fig8" => Ok(Self::Fig8),
            "fig9" => Ok(Self::Fig9),
            "fig10" => Ok(Self::Fig10),
            "fig11" => Ok(Self::Fig11),
            "fig12" => Ok(Self::Fig12),
            "fig13" => Ok(Self::Fig13),
            other => Err(SkgError::Config(format!(
                "unknown figure selector {other:?}; expected fig8..fig13"
            ))),
        }
    }
}

/// The comparison schemes: the three closed-form policies, plus the
/// configured learned policy when one is given.
fn comparison_schemes(cfg: &ExperimentConfig) -> Vec<(&'static str, PolicyDescriptor)> {
    let adaptive_weight = match &cfg.policy {
        PolicyDescriptor::Adaptive { weight } => *weight,
        _ => super::config::DEFAULT_ADAPTIVE_WEIGHT,
    };
    let mut schemes = vec![
        ("const_budget", PolicyDescriptor::ConstBudget),
        ("max_power", PolicyDescriptor::MaxPower),
        ("adaptive", PolicyDescriptor::Adaptive { weight: adaptive_weight }),
    ];
    if let PolicyDescriptor::Learned { .. } = &cfg.policy {
        schemes.push(("learned", cfg.policy.clone()));
    }
    schemes
}

fn scheme_reports(
    cfg: &ExperimentConfig,
) -> Result<Vec<(&'static str, ResilienceReport)>, SkgError> {
    comparison_schemes(cfg)
        .into_iter()
        .map(|(name, descriptor)| {
            let mut scheme_cfg = cfg.clone();
            scheme_cfg.policy = descriptor;
            Ok((name, run_campaign_inner(&scheme_cfg, false)?))
        })
        .collect()
}

fn series_table(
    provenance: Provenance,
    note: &str,
    columns: &[(&str, &[f64])],
) -> String {
    let len = columns[0].1.len();
    let mut header = vec!["t"];
    header.extend(columns.iter().map(|(name, _)| *name));
    let rows: Vec<Vec<f64>> = (0..len)
        .map(|t| {
            let mut row = Vec::with_capacity(columns.len() + 1);
            row.push(t as f64);
            row.extend(columns.iter().map(|(_, c)| c[t]));
            row
        })
        .collect();
    let mut out = Vec::new();
    write_table(&mut out, provenance, &[note.to_string()], &header, &rows)
        .expect("in-memory write cannot fail");
    String::from_utf8(out).expect("CSV output is ASCII")
}

/// Produce the CSV artifacts behind the published figures, as
/// (file name, contents) pairs. Column schemas:
/// - fig8: `t,alpha,psi_t,psi_inf` for the reference constant-power scheme.
/// - fig9: `power_db,alpha,psi_t_eval,psi_inf,p_crit` sweep at t_eval=200.
/// - fig10: `t,<scheme>...` mean transmit power in dB per scheme.
/// - fig11: `t,<scheme>...` mean floored budget per scheme.
/// - fig12: `t,<scheme>...` resilience outage fraction per scheme.
/// - fig13: `t,mean_budget,budget_q03..budget_q97` for the budget-balancing
///   constant power.
pub fn reproduce_figures(
    selector: FigureSelector,
    cfg: &ExperimentConfig,
) -> Result<Vec<(String, String)>, SkgError> {
    let provenance = Provenance { config_hash: cfg.hash(), seed: cfg.seed };
    match selector {
        FigureSelector::Fig8 => {
            let mut fig_cfg = cfg.clone();
            fig_cfg.policy = PolicyDescriptor::Constant { power_db: 10.0 };
            let report = run_campaign(&fig_cfg)?;
            let psi_inf = vec![report.psi_inf; report.alpha.len()];
            let text = series_table(
                Provenance { config_hash: fig_cfg.hash(), seed: fig_cfg.seed },
                "fig8 outage vs ruin, constant 10 dB",
                &[
                    ("alpha", &report.alpha),
                    ("psi_t", &report.psi_t),
                    ("psi_inf", &psi_inf),
                ],
            );
            Ok(vec![("fig8.csv".into(), text)])
        }
        FigureSelector::Fig9 => {
            let powers: Vec<f64> = (4..=28).map(|k| k as f64 * 0.5).collect();
            let sweep = sweep_power(cfg, &powers, 200, cfg.params.eps_tilde)?;
            Ok(vec![("fig9.csv".into(), sweep.to_csv_string(provenance))])
        }
        FigureSelector::Fig10 => {
            let reports = scheme_reports(cfg)?;
            let columns: Vec<(&str, &[f64])> = reports
                .iter()
                .map(|(name, r)| (*name, r.mean_power_db.as_slice()))
                .collect();
            let text =
                series_table(provenance, "fig10 mean transmit power in dB per scheme", &columns);
            Ok(vec![("fig10.csv".into(), text)])
        }
        FigureSelector::Fig11 => {
            let reports = scheme_reports(cfg)?;
            let columns: Vec<(&str, &[f64])> = reports
                .iter()
                .map(|(name, r)| (*name, r.mean_budget.as_slice()))
                .collect();
            let text = series_table(provenance, "fig11 mean budget per scheme", &columns);
            Ok(vec![("fig11.csv".into(), text)])
        }
        FigureSelector::Fig12 => {
            let reports = scheme_reports(cfg)?;
            let columns: Vec<(&str, &[f64])> = reports
                .iter()
                .map(|(name, r)| (*name, r.alpha.as_slice()))
                .collect();
            let text =
                series_table(provenance, "fig12 resilience outage fraction per scheme", &columns);
            Ok(vec![("fig12.csv".into(), text)])
        }
        FigureSelector::Fig13 => {
            let mut fig_cfg = cfg.clone();
            fig_cfg.policy = PolicyDescriptor::ConstBudget;
            let report = run_campaign_inner(&fig_cfg, false)?;
            let mut columns: Vec<(&str, Vec<f64>)> =
                vec![("mean_budget", report.mean_budget.clone())];
            for (i, name) in QUANTILE_NAMES.iter().enumerate() {
                columns.push((*name, report.budget_quantiles.iter().map(|q| q[i]).collect()));
            }
            let borrowed: Vec<(&str, &[f64])> =
                columns.iter().map(|(n, c)| (*n, c.as_slice())).collect();
            let text = series_table(
                Provenance { config_hash: fig_cfg.hash(), seed: fig_cfg.seed },
                "fig13 budget quantile bands, budget-balancing constant power",
                &borrowed,
            );
            Ok(vec![("fig13.csv".into(), text)])
        }
    }
}
