//! End-to-end behaviour of the `noma` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noma_core::{Engine, SweepResult};

const BASE: &str =
    "M = 3\na = 1, 1, 1\nrates = 0.5, 0.5, 0.5\np = 0.01\ngamma = 100\nrho_w_db = 10\n";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn noma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noma"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_reports_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "base.cfg", BASE);
    let out = noma(&["validate", "--config", p(&cfg)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches(" valid").count(), 3, "{text}");
    assert!(text.contains("0.414214"));

    let greedy = write(
        dir.path(),
        "greedy.cfg",
        &BASE.replace("0.5, 0.5, 0.5", "2, 2, 2"),
    );
    let text = String::from_utf8(noma(&["validate", "--config", p(&greedy)]).stdout).unwrap();
    let user2 = text.lines().find(|l| l.starts_with("2 ")).unwrap();
    assert!(user2.contains("violated"), "{user2}");
}

#[test]
fn invalid_configs_exit_nonzero_with_reasons() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(
        dir.path(),
        "missing.cfg",
        "M = 3\na = 1,1,1\nrates = 0.5,0.5,0.5\np = 0.01\nrho_w_db = 10\n",
    );
    let out = noma(&["validate", "--config", p(&missing)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));

    let bad = write(
        dir.path(),
        "bad.cfg",
        &BASE
            .replace("p = 0.01", "p = 1.5")
            .replace("a = 1, 1, 1", "a = 1, 1"),
    );
    let err = String::from_utf8(noma(&["validate", "--config", p(&bad)]).stderr).unwrap();
    assert!(err.contains("p:") && err.contains("a:"), "{err}");

    let unknown = write(dir.path(), "unknown.cfg", &format!("{BASE}colour = blue\n"));
    let out = noma(&["validate", "--config", p(&unknown)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn sweep_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "base.cfg", BASE);
    let csv = dir.path().join("snr.csv");
    let out = noma(&[
        "sweep-snr",
        "--config",
        p(&cfg),
        "--grid",
        "0:40:5",
        "--engines",
        "analytic,montecarlo",
        "--trials",
        "1000000",
        "--seed",
        "5",
        "--out",
        p(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sweep_var,user,engine,op,ci_low,ci_high\n"));
    let res = SweepResult::read_csv(text.as_bytes()).unwrap();
    assert_eq!(res.rows.len(), 9 * 3 * 2);
    assert_eq!(res.to_csv_string().unwrap(), text);

    // user 3's outage is a single decoding event, so the engines must agree
    let a = res.curve(3, Engine::Analytic).unwrap();
    let m = res.curve(3, Engine::MonteCarlo).unwrap();
    for (&(x, op), &(_, hat)) in a.points().iter().zip(m.points()) {
        let se = (op * (1.0 - op) / 1e6).sqrt();
        assert!(
            (op - hat).abs() <= 3.0 * se.max(1e-7),
            "{x} dB: {op} vs {hat}"
        );
    }

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("snr.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["command"], "sweep-snr");
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["config"]["gamma"], 100.0);
    assert!(meta["versions"]["noma_core"].is_string());
}

#[test]
fn backoff_zero_matches_snr_point_and_defaults_apply() {
    let dir = tempfile::tempdir().unwrap();
    // no powers and no rho_w_db: a1 = 1 and 15 dB are assumed
    let cfg = write(
        dir.path(),
        "bo.cfg",
        "M = 3\nrates = 0.5, 0.5, 0.5\np = 0.01\ngamma = 100\n",
    );
    let base_cfg = write(dir.path(), "base.cfg", BASE);
    let bo = noma(&["sweep-backoff", "--config", p(&cfg), "--grid", "0:6:2"]);
    assert!(
        bo.status.success(),
        "{}",
        String::from_utf8_lossy(&bo.stderr)
    );
    let snr = noma(&["sweep-snr", "--config", p(&base_cfg), "--grid", "15:15:1"]);
    let bo = SweepResult::read_csv(&bo.stdout[..]).unwrap();
    let snr = SweepResult::read_csv(&snr.stdout[..]).unwrap();
    assert_eq!(bo.rows.len(), 4 * 3);
    for row in &snr.rows {
        let b = bo
            .rows
            .iter()
            .find(|r| r.sweep_var == 0.0 && r.user == row.user)
            .unwrap();
        assert!((b.op - row.op).abs() < 1e-12);
    }
    // default back-off grid is 0..10 dB in 0.5 dB steps
    let full = noma(&["sweep-backoff", "--config", p(&cfg)]);
    assert_eq!(
        SweepResult::read_csv(&full.stdout[..]).unwrap().rows.len(),
        21 * 3
    );
}

#[test]
fn engine_failures_name_the_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bo.cfg",
        "M = 3\na1 = -1\nrates = 0.5, 0.5, 0.5\np = 0.01\ngamma = 100\n",
    );
    let out = noma(&["sweep-backoff", "--config", p(&cfg), "--grid", "0:1:1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta_db = 0"));
}

#[test]
fn diversity_report_and_window_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "awgn.cfg",
        &BASE
            .replace("p = 0.01", "p = 0")
            .replace("gamma = 100", "gamma = 0"),
    );
    let out = noma(&["diversity", "--config", p(&cfg), "--window", "35:50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let slopes: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for (j, s) in slopes.iter().enumerate() {
        assert!((s - (j + 1) as f64).abs() < 0.2, "user {}: {s}", j + 1);
    }
    let single = noma(&["diversity", "--config", p(&cfg), "--window", "40:40"]);
    assert!(!single.status.success());
    assert!(String::from_utf8_lossy(&single.stderr).contains("invalid argument"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "base.cfg", BASE);
    let run = || {
        noma(&[
            "simulate",
            "--config",
            p(&cfg),
            "--trials",
            "200000",
            "--seed",
            "9",
            "--tdma-rate-scaling",
            "none",
        ])
    };
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let res = SweepResult::read_csv(&a.stdout[..]).unwrap();
    assert_eq!(res.rows.len(), 6);
    assert!(res
        .rows
        .iter()
        .all(|r| r.ci_low.unwrap() <= r.op && r.op <= r.ci_high.unwrap()));
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "base.cfg", BASE);
    for args in [
        vec!["sweep-snr", "--config", p(&cfg), "--grid", "0:10"],
        vec!["sweep-snr", "--config", p(&cfg), "--engines", "magic"],
        vec![
            "sweep-snr",
            "--config",
            p(&cfg),
            "--engines",
            "montecarlo",
            "--trials",
            "0",
        ],
        vec![
            "sweep-snr",
            "--config",
            p(&cfg),
            "--tdma-rate-scaling",
            "half",
        ],
    ] {
        assert!(!noma(&args).status.success(), "{args:?}");
    }
}
