//! End-to-end runs of the `lorhol` binary.

use std::fs;
use std::process::{Command, Output};

fn lorhol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorhol")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn demos_classify_and_exit_zero() {
    for (name, label) in [("flat", "Decomposable"), ("toric-ppwave", "Type2"), ("footnote", "NotReducible")] {
        let out = lorhol(&["demo", name, "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["seed"], 3);
        assert_eq!(v["holonomy"]["report"]["type_label"], label);
        assert_eq!(v["check"]["passed"], true);
    }
}

#[test]
fn missing_config_and_unknown_demo_exit_two() {
    assert_eq!(lorhol(&["check"]).status.code(), Some(2));
    assert_eq!(lorhol(&["demo", "nonsense"]).status.code(), Some(2));
}

#[test]
fn euclidean_metric_fails_validation_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.toml");
    fs::write(&cfg, "[metric]\nkind = \"general\"\nn = 1\nentries = [[\"1\", \"0\", \"0\"], [\"0\", \"1\", \"0\"], [\"0\", \"0\", \"1\"]]\n").unwrap();
    let out = lorhol(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn geodesic_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    fs::write(
        &cfg,
        "seed = 4\n[metric]\nkind = \"corollary\"\n[geodesic]\nt_end = 2.0\ndt = 0.5\nstates = [{ position = [0.5, 0.5, 0.5, 0.5], velocity = [0.1, 0.2, -0.3, 0.05] }]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = lorhol(&["geodesic", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report, json(&out));
    let csv = fs::read_to_string(out_dir.join("geodesic_0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x,y1,y2,z,vx,vy1,vy2,vz,energy");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.first().unwrap()[0], 0.0);
    assert_eq!(rows.last().unwrap()[0], 2.0);
    assert!(rows.iter().all(|r| r.len() == 10));
}

#[test]
fn text_format_is_line_oriented() {
    let out = lorhol(&["demo", "example52", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("holonomy: Type2")), "{text}");
}
