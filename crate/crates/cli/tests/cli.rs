//! End-to-end checks of the command-line surface: exit codes, validation
//! reporting, and byte-stable emission.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_uav-tsptw")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario_json(eta2: f64) -> String {
    format!(
        r#"{{
  "depot": [1.5, 398.0],
  "users": [
    {{"pos": [120.0, 40.0], "q_bits": 1.0e7, "eta_s": 20.0}},
    {{"pos": [320.0, 290.0], "q_bits": 1.0e7, "eta_s": {eta2}}},
    {{"pos": [45.0, 210.0], "q_bits": 1.0e7, "eta_s": 30.0}}
  ],
  "uav": {{
    "altitude_m": 50.0, "v_max": 50.0, "delta_v": 50.0, "v_hover": 10.2,
    "p_com_w": 5.0, "energy_budget_j": 5.0e5
  }},
  "channel": {{
    "bandwidth_hz": 2.0e6, "mu0_db": -30.0, "pathloss_exp": 2.3,
    "noise_dbm": -110.0, "rician_g_db": 15.0, "epsilon": 0.001
  }}
}}"#
    )
}

fn write_scenario(dir: &Path, eta2: f64) -> PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(&path, scenario_json(eta2)).unwrap();
    path
}

#[test]
fn plan_finds_tours_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), 14.0);
    let out = run(&["plan", "--scenario", scenario.to_str().unwrap(), "--method", "dp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"method\": \"dp\""));
    assert!(text.contains("\"deadline_feasible\""));
}

#[test]
fn plan_outage_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // an unreachable deadline: user 2 is ~336 m out, needs ~6.9 s minimum
    let scenario = write_scenario(dir.path(), 2.0);
    let out = run(&["plan", "--scenario", scenario.to_str().unwrap(), "--method", "dp"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plan_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), 14.0);
    let a = run(&["plan", "--scenario", scenario.to_str().unwrap()]);
    let b = run(&["plan", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_method_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), 14.0);
    let out = run(&["plan", "--scenario", scenario.to_str().unwrap(), "--method", "warp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["plan", "--warp", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_each_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = scenario_json(14.0).replace("\"eta_s\": 30.0", "\"eta_s\": -1.0");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let out = run(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("user 3"), "stderr: {err}");
    assert!(err.contains("deadline_s"), "stderr: {err}");
}

#[test]
fn validate_accepts_good_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), 14.0);
    let out = run(&["validate", "--scenario", scenario.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("scenario OK"));
}

#[test]
fn optimize_reports_binding_deadline_plan() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), 14.0);
    let out = run(&[
        "optimize",
        "--scenario",
        scenario.to_str().unwrap(),
        "--tour",
        "3,2,1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"converged\": true"));
    assert!(text.contains("\"within_budget\": true"));

    // an infeasible tour is an outage outcome, not a crash
    let out = run(&[
        "optimize",
        "--scenario",
        scenario.to_str().unwrap(),
        "--tour",
        "1,2,3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"feasible\": false"));

    // not a permutation
    let out = run(&[
        "optimize",
        "--scenario",
        scenario.to_str().unwrap(),
        "--tour",
        "1,1,2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn power_curve_emits_contract_header() {
    let out = run(&["power-curve", "--v-max", "1", "--step", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("v,p_fly_w"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn simulate_unknown_preset_is_usage_error() {
    let out = run(&["simulate", "--preset", "fig99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig5"));
}

#[test]
fn simulate_echoes_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"trials": 2, "k_users": 3, "eta_min_s": 20.0, "eta_max_s": 40.0, "seed": 123}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed = 123"));
    let csv = std::fs::read_to_string(out_dir.join("sweep_none.csv")).unwrap();
    assert!(csv.starts_with(
        "sweep_value,method,outage_rate,energy_mean_j,energy_min_j,energy_max_j,runtime_mean_s,trials\n"
    ));
    assert!(out_dir.join("sweep_none_meta.json").exists());
}

#[test]
fn scenario_round_trips_through_parser() {
    use uav_tsptw::schema::ScenarioDoc;
    let emit = |s: &uav_tsptw::Scenario| {
        uav_tsptw::emit::to_json_string(
            &serde_json::to_value(ScenarioDoc::from_scenario(s)).unwrap(),
        )
    };
    // dB spellings convert into full-precision linear values, so the fixed
    // point of parse/emit is reached after one emission; from there the
    // round trip is lossless byte for byte
    let s1 = ScenarioDoc::parse(&scenario_json(14.0))
        .unwrap()
        .into_scenario()
        .unwrap();
    let doc2 = emit(&s1);
    let s2 = ScenarioDoc::parse(&doc2).unwrap().into_scenario().unwrap();
    let doc3 = emit(&s2);
    assert_eq!(doc2, doc3);
    let s3 = ScenarioDoc::parse(&doc3).unwrap().into_scenario().unwrap();
    assert_eq!(s2.depot, s3.depot);
    assert_eq!(s2.users, s3.users);
    assert_eq!(s2.uav, s3.uav);
    assert_eq!(s2.channel, s3.channel);
    assert_eq!(s2.power, s3.power);
    // nine significant digits keep the physics identical in practice
    assert!((s1.rate_bps() - s2.rate_bps()).abs() / s1.rate_bps() < 1e-8);
}
