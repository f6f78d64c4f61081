//! End-to-end checks of the `skb` binary: exit codes, artifact layout and
//! cross-worker determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skb"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        r#"
[system]
initial_budget = 20.0
msg_len = 2.0
horizon = 50

[campaign]
runs = 30
seed = 5

[rl]
iterations = 2
episodes_per_iter = 4
episode_horizon = 40
"#,
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn simulate_writes_report_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = skb(
        &["--config", &cfg, "--out", "art", "simulate", "--trajectories", "2"],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("art/report.csv")).unwrap();
    assert!(report.starts_with("# config_hash="), "missing provenance: {report}");
    assert!(report.contains("seed=5"));
    assert!(report.lines().any(|l| l.starts_with("t,mean_power_linear")));
    assert_eq!(report.lines().filter(|l| !l.starts_with('#')).count(), 52); // header + 51 slots
    for r in 0..2 {
        let traj = fs::read_to_string(tmp.path().join(format!("art/trajectory_{r}.csv"))).unwrap();
        assert!(traj.contains("t,budget_bits"));
        assert!(traj.starts_with("# config_hash="));
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha(50)="), "stdout: {stdout}");
}

#[test]
fn worker_count_never_changes_artifact_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    for (dir, workers) in [("one", "1"), ("eight", "8")] {
        let out = skb(
            &["--config", &cfg, "--out", dir, "--workers", workers, "simulate"],
            tmp.path(),
        );
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(tmp.path().join("one/report.csv")).unwrap();
    let b = fs::read(tmp.path().join("eight/report.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn min_budget_and_pcrit_report_reference_values() {
    let tmp = tempfile::tempdir().unwrap();
    let out = skb(&["--out", "o", "min-budget"], tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("min_budget=40 bits"), "stdout: {stdout}");
    let csv = fs::read_to_string(tmp.path().join("o/min_budget.csv")).unwrap();
    assert!(csv.lines().last().unwrap().ends_with(",40"));

    let out = skb(&["--out", "o", "pcrit", "--power-db", "10"], tmp.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("o/pcrit.csv")).unwrap();
    let row = csv.lines().last().unwrap();
    let p_crit: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((p_crit - 0.398197).abs() < 1e-4, "p_crit {p_crit}");
    let drift: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((drift + 0.4004408).abs() < 1e-4, "drift {drift}");
}

#[test]
fn exit_codes_distinguish_config_and_numerical_errors() {
    let tmp = tempfile::tempdir().unwrap();
    // Malformed config: exit 2.
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[campaign]\nruns = 0\n").unwrap();
    let out = skb(&["--config", bad.to_str().unwrap(), "simulate"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // Missing config file: exit 2.
    let out = skb(&["--config", "nope.toml", "simulate"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    // Unknown figure: exit 2.
    let out = skb(&["--out", "o", "reproduce", "fig99"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    // Undersized ruin grid: numerical error, exit 3.
    let out = skb(
        &["--out", "o", "ruin", "--power-db", "10", "--cap", "90", "--t-max", "200"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cap"), "stderr: {stderr}");
}

#[test]
fn ruin_subcommand_writes_series_and_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = skb(
        &["--config", &cfg, "--out", "o", "ruin", "--power-db", "10", "--t-max", "40"],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let series = fs::read_to_string(tmp.path().join("o/ruin_series.csv")).unwrap();
    assert!(series.contains("t,psi"));
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 42); // header + 41
    let grid = fs::read_to_string(tmp.path().join("o/ruin_grid.csv")).unwrap();
    assert!(grid.contains("budget_bits,psi"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("psi_inf="), "stdout: {stdout}");
}

#[test]
fn train_then_simulate_with_learned_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = skb(&["--config", &cfg, "--out", "rl", "train-rl"], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let policy = tmp.path().join("rl/policy.txt");
    assert!(policy.exists());
    let log = fs::read_to_string(tmp.path().join("rl/training_log.csv")).unwrap();
    assert!(log.contains("iteration,mean_return"));
    assert_eq!(log.lines().filter(|l| !l.starts_with('#')).count(), 3); // header + 2 iterations

    let learned = tmp.path().join("learned.toml");
    fs::write(
        &learned,
        format!(
            "[system]\ninitial_budget = 20.0\nmsg_len = 2.0\nhorizon = 50\n\n\
             [policy]\nkind = \"learned\"\npath = {:?}\n\n[campaign]\nruns = 10\nseed = 5\n",
            policy.display().to_string()
        ),
    )
    .unwrap();
    let out = skb(
        &["--config", learned.to_str().unwrap(), "--out", "sim", "simulate"],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("sim/report.csv")).unwrap();
    // Ruin-theory columns are NaN for a learned policy.
    assert!(report.lines().any(|l| l.ends_with(",NaN")));
}

#[test]
fn reproduce_fig8_emits_documented_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = skb(&["--config", &cfg, "--out", "figs", "reproduce", "fig8"], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("figs/fig8.csv")).unwrap();
    assert!(text.lines().any(|l| l == "t,alpha,psi_t,psi_inf"), "{text}");
}

#[test]
fn sweep_power_reports_minimum_power() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = skb(
        &[
            "--config",
            &cfg,
            "--out",
            "o",
            "sweep-power",
            "--powers-db",
            "4,7,10",
            "--t-eval",
            "40",
            "--alpha-target",
            "0.1",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("o/sweep.csv")).unwrap();
    assert!(text.lines().any(|l| l == "power_db,alpha,psi_t_eval,psi_inf,p_crit"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn reference_config_spells_out_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let text = fs::read_to_string(&path).unwrap();
    let parsed = skbudget::harness::ExperimentConfig::from_toml_str(&text).unwrap();
    assert_eq!(parsed, skbudget::harness::ExperimentConfig::default());
}
