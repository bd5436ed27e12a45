use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use opinion_core::graph::generators::fixture10;
use opinion_core::graph::GraphFile;
use opinion_core::spectral::leading_eigenpair;
use serde_json::Value;

fn opinion(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opinion"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

const FIG4_BY_HAND: &str = r#"{
  "graph": "builtin:fixture10",
  "params": {"d": 1.0, "alpha": 1.2, "gamma": 1.3, "u": 0.294},
  "x0": {"mode": "uniform", "scale": 0.1, "seed": 0},
  "switches": [{"t": 15.0, "agents": [1]}],
  "dt": 0.01,
  "horizon": 30.0
}"#;

#[test]
fn analyze_complete_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = opinion(&["analyze", "--graph", "builtin:complete:10"], dir.path());
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!((report["spectrum"]["lambda_star"].as_f64().unwrap() - 9.0).abs() < 1e-10);
    assert!((report["thresholds"]["u_star"].as_f64().unwrap() - 1.0 / 12.9).abs() < 1e-10);
    assert_eq!(report["balance"]["balanced"], true);
}

#[test]
fn analyze_unbalanced_triangle_prints_witness() {
    let dir = tempfile::tempdir().unwrap();
    let graph = r#"{"n": 3, "edges": [[1,2,1],[2,1,1],[2,3,1],[3,2,1],[3,1,-1],[1,3,-1]]}"#;
    fs::write(dir.path().join("tri.json"), graph).unwrap();
    let out = opinion(&["analyze", "--graph", "tri.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["balance"]["balanced"], false);
    let signs = report["balance"]["witness"]["signs"].as_array().unwrap();
    let product: i64 = signs.iter().map(|s| s.as_i64().unwrap()).product();
    assert_eq!(product, -1);
}

#[test]
fn fixture_threshold_is_below_fig4_attention() {
    let dir = tempfile::tempdir().unwrap();
    let out = opinion(&["analyze", "--graph", "builtin:fixture10"], dir.path());
    let u_star = stdout_json(&out)["thresholds"]["u_star"].as_f64().unwrap();
    assert!(u_star < 0.294);
}

#[test]
fn simulate_is_deterministic_and_matches_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fig4.json"), FIG4_BY_HAND).unwrap();
    for out_dir in ["a", "b"] {
        let out = opinion(&["--out", out_dir, "simulate", "fig4.json"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let out = opinion(&["--out", "r", "reproduce", "fig4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    for file in ["fig4_trajectory.csv", "fig4_events.json", "fig4_summary.json"] {
        assert_eq!(read(&format!("a/{file}")), read(&format!("b/{file}")), "{file}");
    }
    assert_eq!(read("a/fig4_trajectory.csv"), read("r/fig4_trajectory.csv"));
    assert_eq!(read("a/fig4_events.json"), read("r/fig4_events.json"));
}

#[test]
fn zero_attention_decays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"graph": "builtin:complete:3", "params": {"d": 1, "alpha": 1.2, "gamma": 1.3, "u": 0},
                  "x0": [0.5, -0.2, 0.1], "horizon": 1.0}"#;
    fs::write(dir.path().join("decay.json"), cfg).unwrap();
    let out = opinion(&["simulate", "decay.json"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("out/decay_trajectory.csv")).unwrap();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-9);
    assert!((last[1] - 0.5 * (-1.0f64).exp()).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"graph": "builtin:fixture10", "params": {"d": 1}}"#).unwrap();
    let out = opinion(&["simulate", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params") && err.contains("line"), "{err}");

    let out = opinion(&["simulate", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = opinion(&["reproduce", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // origin-only regime: no bistable pair to estimate against
    let out = opinion(&["estimate-eps", "--graph", "builtin:fixture10", "--u", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let blowup = r#"{"graph": "builtin:complete:3", "params": {"d": 1, "alpha": 1.2, "gamma": 1.3, "u": 0.3},
                     "x0": [1, 0, 0], "dt": 1e200, "horizon": 1e200}"#;
    fs::write(dir.path().join("blowup.json"), blowup).unwrap();
    let out = opinion(&["simulate", "blowup.json"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn switch_design_prints_switched_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = opinion(&["switch-design", "--graph", "builtin:fixture10", "--agents", "1,2,3"], dir.path());
    assert!(out.status.success());
    let file: GraphFile = serde_json::from_slice(&out.stdout).unwrap();
    let g = file.to_graph().unwrap();
    let theta = g.balance_certificate().theta().unwrap().clone();
    let mut w = theta.switching_set();
    if w.len() != 3 {
        w = theta.complement().switching_set();
    }
    assert_eq!(w, vec![0, 1, 2]);
}

#[test]
fn fixture_file_matches_builtin() {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fixture10.json")).unwrap();
    let file: GraphFile = serde_json::from_str(&text).unwrap();
    let g = file.to_graph().unwrap();
    assert_eq!(g, fixture10());
    assert!(g.is_strongly_connected() && g.is_all_positive());
    let spec = leading_eigenpair(&g).unwrap();
    assert!(spec.simple);
    assert!(spec.cubic_coefficient() > 0.0);
}

#[test]
fn sweep_writes_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = opinion(
        &["sweep", "--graph", "builtin:complete:10", "--u-min", "0.05", "--u-max", "0.1", "--steps", "10"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result = stdout_json(&out);
    let u_hat = result["u_hat"].as_f64().unwrap();
    assert!((u_hat - 0.07752).abs() <= 0.005);
    assert!(fs::read_to_string(dir.path().join("out/sweep.svg")).unwrap().starts_with("<svg"));
}
