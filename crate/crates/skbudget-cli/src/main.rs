//! `skb`: experiment driver for the secret-key budget simulator.
//!
//! Every subcommand reads an optional TOML config (defaults reproduce the
//! reference scenario), applies flag overrides, and writes CSV artifacts
//! with a provenance comment (config hash, master seed) into the output
//! directory. Exit codes: 0 success, 2 config or IO errors, 3 numerical
//! non-convergence.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use skbudget::budget::{simulate_run, write_trajectory_csv};
use skbudget::harness::{
    reproduce_figures, run_campaign, sweep_power, ExperimentConfig, FigureSelector, Provenance,
};
use skbudget::model::db_to_linear;
use skbudget::numerics::stream::RandomStream;
use skbudget::resilience::ResilienceConfig;
use skbudget::rl::{save_policy, train_policy, write_training_csv};
use skbudget::ruin::{
    critical_probability, expected_usage, finite_time_ruin, finite_time_ruin_series,
    ultimate_ruin, write_ruin_csv, GridSpec,
};
use skbudget::SkgError;

#[derive(Parser)]
#[command(
    name = "skb",
    version,
    about = "Monte Carlo campaigns, ruin analysis and policy training for \
             secret-key budget systems"
)]
struct Cli {
    /// TOML experiment config; the reference scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo run count override.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Worker thread count override; 0 uses the library default.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one campaign with the configured policy; writes report.csv.
    Simulate {
        /// Also export the first N per-run trajectories.
        #[arg(long, default_value_t = 0)]
        trajectories: usize,
    },
    /// Constant-power sweep: alpha(t_eval), psi(t_eval), psi_inf and p_crit
    /// per power, plus the interpolated minimum power for the target.
    SweepPower {
        /// Comma-separated transmit powers in dB.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "2,3,4,5,6,7,8,9,10,11,12,13,14"
        )]
        powers_db: Vec<f64>,
        /// Slot at which the MC outage fraction is evaluated.
        #[arg(long, default_value_t = 200)]
        t_eval: usize,
        /// Outage target for the minimum-power interpolation.
        #[arg(long, default_value_t = 0.1)]
        alpha_target: f64,
    },
    /// Ruin probability of the budget walk at a constant power; writes the
    /// time series and the budget-grid table.
    Ruin {
        #[arg(long, default_value_t = 10.0)]
        power_db: f64,
        /// Series horizon; the configured horizon when omitted.
        #[arg(long)]
        t_max: Option<usize>,
        /// Budget-grid cap in bits; raise it if the leak check trips.
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Critical message probability and expected per-slot usage at a power.
    Pcrit {
        #[arg(long, default_value_t = 10.0)]
        power_db: f64,
    },
    /// Alert budget threshold of the configured scenario.
    MinBudget,
    /// Train a power policy; writes the policy file and a training log.
    TrainRl,
    /// Regenerate the data files behind a published figure (fig8..fig13).
    Reproduce { fig: String },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(if e.is_numerical() { 3 } else { 2 });
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, SkgError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.runs = runs;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, SkgError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<(), SkgError> {
    let cfg = load_config(&cli)?;
    let provenance = Provenance { config_hash: cfg.hash(), seed: cfg.seed };
    match cli.command {
        Command::Simulate { trajectories } => {
            let report = run_campaign(&cfg)?;
            let path = write_artifact(&cfg.out_dir, "report.csv", &report.to_csv_string(provenance))?;
            let horizon = report.horizon();
            println!(
                "wrote {} (runs={}, horizon={})",
                path.display(),
                cfg.runs,
                horizon
            );
            println!(
                "alpha({horizon})={} mean_eps({horizon})={} psi_inf={} min_budget={}",
                report.alpha[horizon], report.mean_eps[horizon], report.psi_inf, report.min_budget
            );
            if trajectories > 0 {
                let policy = cfg.build_policy()?;
                for r in 0..trajectories.min(cfg.runs) {
                    let mut rng = RandomStream::new(cfg.seed, r as u64);
                    let traj = simulate_run(&cfg.params, policy.as_ref(), &mut rng)?;
                    let mut buf = Vec::new();
                    writeln!(buf, "{}", provenance.comment())?;
                    writeln!(buf, "# stream_index={r}")?;
                    write_trajectory_csv(&traj, &mut buf)?;
                    let text = String::from_utf8(buf).expect("trajectory CSV is ASCII");
                    write_artifact(&cfg.out_dir, &format!("trajectory_{r}.csv"), &text)?;
                }
                println!("wrote {} trajectories", trajectories.min(cfg.runs));
            }
        }
        Command::SweepPower { powers_db, t_eval, alpha_target } => {
            let sweep = sweep_power(&cfg, &powers_db, t_eval, alpha_target)?;
            let path = write_artifact(&cfg.out_dir, "sweep.csv", &sweep.to_csv_string(provenance))?;
            println!("wrote {}", path.display());
            match sweep.min_power_db {
                Some(p) => println!("min power for alpha<={alpha_target} at t->inf: {p} dB"),
                None => println!("no power in the sweep meets alpha<={alpha_target}"),
            }
        }
        Command::Ruin { power_db, t_max, cap } => {
            let power = db_to_linear(power_db);
            let t_max = t_max.unwrap_or(cfg.params.horizon);
            let spec = GridSpec { cap, ..GridSpec::default() };
            let series = finite_time_ruin_series(&cfg.params, power, t_max, &spec)?;
            let psi_inf = ultimate_ruin(&cfg.params, power, &spec)?;
            let (_, grid) = finite_time_ruin(&cfg.params, power, t_max, &spec)?;
            let mut buf = Vec::new();
            writeln!(buf, "{}", provenance.comment())?;
            writeln!(buf, "# power_db={power_db} psi_inf={psi_inf}")?;
            writeln!(buf, "t,psi")?;
            for (t, psi) in series.iter().enumerate() {
                writeln!(buf, "{t},{psi}")?;
            }
            let text = String::from_utf8(buf).expect("series CSV is ASCII");
            let series_path = write_artifact(&cfg.out_dir, "ruin_series.csv", &text)?;
            let mut buf = Vec::new();
            writeln!(buf, "{}", provenance.comment())?;
            writeln!(buf, "# power_db={power_db} t={t_max}")?;
            write_ruin_csv(&grid, &mut buf)?;
            let text = String::from_utf8(buf).expect("grid CSV is ASCII");
            let grid_path = write_artifact(&cfg.out_dir, "ruin_grid.csv", &text)?;
            println!("wrote {} and {}", series_path.display(), grid_path.display());
            println!(
                "psi({t_max})={} psi_inf={psi_inf} at {power_db} dB",
                series[t_max]
            );
        }
        Command::Pcrit { power_db } => {
            let power = db_to_linear(power_db);
            let p_crit = critical_probability(&cfg.params, power)?;
            let drift = expected_usage(&cfg.params, power)?;
            let mut buf = Vec::new();
            writeln!(buf, "{}", provenance.comment())?;
            writeln!(buf, "power_db,p_crit,expected_usage")?;
            writeln!(buf, "{power_db},{p_crit},{drift}")?;
            let text = String::from_utf8(buf).expect("CSV is ASCII");
            let path = write_artifact(&cfg.out_dir, "pcrit.csv", &text)?;
            println!("wrote {}", path.display());
            println!(
                "p_crit={p_crit} expected_usage={drift} bits/slot at {power_db} dB \
                 (p_tx={})",
                cfg.params.p_tx
            );
        }
        Command::MinBudget => {
            let rescfg = ResilienceConfig::from_params(&cfg.params)?;
            let min_budget = rescfg.min_budget();
            let mut buf = Vec::new();
            writeln!(buf, "{}", provenance.comment())?;
            writeln!(buf, "eps_tilde,alert_mean,msg_len,min_budget")?;
            writeln!(
                buf,
                "{},{},{},{min_budget}",
                cfg.params.eps_tilde, cfg.params.alert_mean, cfg.params.msg_len
            )?;
            let text = String::from_utf8(buf).expect("CSV is ASCII");
            let path = write_artifact(&cfg.out_dir, "min_budget.csv", &text)?;
            println!("wrote {}", path.display());
            println!("min_budget={min_budget} bits");
        }
        Command::TrainRl => {
            let outcome = train_policy(&cfg.params, &cfg.reward_weights, &cfg.trainer)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let policy_path = cfg.out_dir.join("policy.txt");
            save_policy(&outcome.policy, &policy_path)?;
            let mut buf = Vec::new();
            writeln!(buf, "{}", provenance.comment())?;
            write_training_csv(&outcome.log, &mut buf)?;
            let text = String::from_utf8(buf).expect("training CSV is ASCII");
            let log_path = write_artifact(&cfg.out_dir, "training_log.csv", &text)?;
            println!("wrote {} and {}", policy_path.display(), log_path.display());
            if let Some(last) = outcome.log.last() {
                println!(
                    "final iteration {}: mean_return={} mean_power_db={} alpha_estimate={}",
                    last.iteration, last.mean_return, last.mean_power_db, last.alpha_estimate
                );
            }
        }
        Command::Reproduce { fig } => {
            let selector: FigureSelector = fig.parse()?;
            let files = reproduce_figures(selector, &cfg)?;
            for (name, contents) in &files {
                let path = write_artifact(&cfg.out_dir, name, contents)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
