mod common;

use std::path::Path;
use std::process::{Command, Output};

use dynpanel::PanelDataset;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynpanel")).args(args).env_remove("DYNPANEL_WORKERS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_a_loadable_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d1.csv");
    let o = run(&["simulate", "--design", "1", "--n", "500", "--seed", "3", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let data = PanelDataset::load_csv(&out).unwrap();
    assert_eq!((data.n(), data.t_max(), data.k()), (500, 4, 2));
    let text = std::fs::read_to_string(&out).unwrap();
    // Long format: a header plus one row per individual and period.
    assert_eq!(text.lines().count(), 1 + 500 * 5);
}

#[test]
fn simulate_then_estimate_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let json = dir.path().join("est.json");
    assert_eq!(run(&["simulate", "--n", "2000", "--seed", "5", "--out", path(&csv)]).status.code(), Some(0));
    let o = run(&["estimate", "--data", path(&csv), "--out-json", path(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("beta:"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let beta: Vec<f64> = serde_json::from_value(v["result"]["params"]["beta"].clone()).unwrap();
    let data = PanelDataset::load_csv(&csv).unwrap();
    let est = dynpanel::estimate(&data, &dynpanel::EstimationConfig::default()).unwrap();
    assert_eq!(beta, est.params.beta);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["estimate", "--frobnicate", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["simulate", "estimate", "bootstrap", "montecarlo", "identify-check"] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}

#[test]
fn missing_file_is_a_data_error() {
    let o = run(&["estimate", "--data", "/nonexistent/panel.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn no_switchers_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flat.csv");
    let row = ([1, 1, 1, 1, 1], [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6], [0.7, 0.8]]);
    common::panel(&[row, row]).save_csv(&csv).unwrap();
    let o = run(&["estimate", "--data", path(&csv)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("NoSwitchers"), "{}", stderr(&o));
}

#[test]
fn fixed_bandwidth_conflicts_with_rule() {
    let o = run(&["estimate", "--data", "x.csv", "--bandwidth-rule", "paper", "--h", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&cfg, "# simulation defaults\nn = 300\nseed = 9\ndesign = 2\n").unwrap();
    let csv = dir.path().join("x.csv");
    let o = run(&["--config", path(&cfg), "simulate", "--out", path(&csv), "--out-json", path(&a)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["--config", path(&cfg), "simulate", "--n", "400", "--out", path(&csv), "--out-json", path(&b)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let va: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let vb: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!((va["n"].as_u64(), va["seed"].as_u64()), (Some(300), Some(9)));
    assert_eq!((vb["n"].as_u64(), vb["seed"].as_u64()), (Some(400), Some(9)));
}

#[test]
fn bad_config_line_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "n 300\n").unwrap();
    let o = run(&["--config", path(&cfg), "simulate", "--out", "x.csv"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn bootstrap_reports_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let json = dir.path().join("boot.json");
    run(&["simulate", "--n", "1500", "--seed", "1", "--out", path(&csv)]);
    let o = run(&["bootstrap", "--data", path(&csv), "--method", "classic", "--B", "20", "--out-json", path(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("CI ["));
    assert!(stdout(&o).contains("inconsistent"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v["draws"].as_array().unwrap().is_empty());
    let o = run(&[
        "bootstrap", "--data", path(&csv), "--method", "classic", "--B", "20", "--dump-draws", "--out-json", path(&json),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["draws"].as_array().unwrap().len(), 20);
    let o = run(&["bootstrap", "--data", path(&csv), "--method", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn montecarlo_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mc.csv");
    let json = dir.path().join("mc.json");
    let args = ["montecarlo", "--design", "1", "--n", "400,800", "--reps", "4", "--seed", "2"];
    let o = run(&[&args[..], &["--out", path(&csv)]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&[&args[..], &["--out", path(&json)]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<dynpanel::mc::TableRow> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    let from_json: Vec<dynpanel::mc::TableRow> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rows.len(), from_json.len());
    for (a, b) in rows.iter().zip(&from_json) {
        assert_eq!((&a.design, a.n, &a.statistic, &a.parameter), (&b.design, b.n, &b.statistic, &b.parameter));
        assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0));
    }
    assert!(rows.iter().any(|r| r.n == 800 && r.statistic == "RMSE" && r.parameter == "gamma"));
}

#[test]
fn identify_check_runs() {
    let o = run(&["identify-check", "--design", "1", "--n", "40000", "--bins", "8", "--min-bin", "100", "--maximizers", "--h", "0.2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("agreement rate") && s.contains("Q1n grid argmax"));
}
