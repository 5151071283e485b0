use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qlaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlaw"))
        .args(args)
        .output()
        .expect("qlaw binary runs")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error output present");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn propagate_case_a_writes_report_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlaw(&[
        "propagate",
        "--scenario",
        "caseA.json",
        "--law",
        "modified",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["converged"], true);
    let days = summary["summary"]["transfer_days"].as_f64().unwrap();
    assert!(days > 5.0 && days < 60.0, "transfer took {days} days");
    assert!(summary["summary"]["propellant_kg"].as_f64().unwrap() > 0.0);

    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let rows = csv.lines().count() - 1;
    assert_eq!(rows as u64, summary["recorded_samples"].as_u64().unwrap());
    assert!(csv.starts_with("t_s,a_km,e,i_deg,raan_deg,argp_deg,theta_deg,mass_kg,thrust_on,"));

    let echoed = &summary["scenario"];
    for key in [
        "spacecraft",
        "initial_orbit",
        "target",
        "controller",
        "dynamics",
        "integrator",
    ] {
        assert!(echoed.get(key).is_some(), "summary misses {key}");
    }
    assert_eq!(echoed["controller"]["law"], "modified");
    assert!(echoed["controller"]["hyperparameters"]["zeta"].is_number());
    assert!(echoed["integrator"]["step_s"].is_number());

    for plot in ["elements.svg", "lyapunov.svg", "effectivity.svg", "equatorial.svg"] {
        let svg = fs::read_to_string(dir.path().join("plots").join(plot)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<path"), "{plot}");
    }
}

#[test]
fn echoed_config_reproduces_trajectory_bit_for_bit() {
    let first = tempfile::tempdir().unwrap();
    let out = qlaw(&[
        "propagate",
        "--scenario",
        "caseA",
        "--weights",
        "1,0.5,2",
        "--eta",
        "0.2",
        "--out",
        path_str(first.path()),
    ]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_str(&fs::read_to_string(first.path().join("summary.json")).unwrap()).unwrap();
    let echo = first.path().join("echo.json");
    fs::write(&echo, serde_json::to_string_pretty(&summary["scenario"]).unwrap()).unwrap();

    let second = tempfile::tempdir().unwrap();
    let out = qlaw(&[
        "propagate",
        "--scenario",
        path_str(&echo),
        "--out",
        path_str(second.path()),
    ]);
    assert!(out.status.success());
    let a = fs::read(first.path().join("trajectory.csv")).unwrap();
    let b = fs::read(second.path().join("trajectory.csv")).unwrap();
    assert!(a == b, "trajectories differ");
}

#[test]
fn unconverged_run_exits_with_status_two() {
    let out = qlaw(&["propagate", "--scenario", "caseC", "--max-days", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "did-not-converge");
    assert_eq!(err["termination"], "max_duration");
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout["summary"]["converged"], false);
}

#[test]
fn unknown_key_is_rejected_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(preset_path("caseA")).unwrap()).unwrap();
    doc["controller"]["gain"] = Value::from(3.0);
    fs::write(&path, doc.to_string()).unwrap();
    let out = qlaw(&["propagate", "--scenario", path_str(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "scenario-file");
    assert!(err["message"].as_str().unwrap().contains("gain"));
}

#[test]
fn invalid_value_names_offending_key() {
    let out = qlaw(&["propagate", "--scenario", "caseA", "--eta", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert!(err["key"].as_str().unwrap().contains("eta_threshold"), "{err}");
}

#[test]
fn missing_scenario_reports_runtime_error() {
    let out = qlaw(&["propagate", "--scenario", "/nonexistent/caseZ.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("caseZ"));
}

#[test]
fn report_regenerates_plots_from_csv() {
    let run = tempfile::tempdir().unwrap();
    assert!(
        qlaw(&["propagate", "--scenario", "caseA", "--out", path_str(run.path())])
            .status
            .success()
    );
    let report = tempfile::tempdir().unwrap();
    let csv = run.path().join("trajectory.csv");
    let out = qlaw(&[
        "report",
        "--trajectory",
        path_str(&csv),
        "--out",
        path_str(report.path()),
    ]);
    assert!(out.status.success());
    for plot in ["elements.svg", "lyapunov.svg", "effectivity.svg", "equatorial.svg"] {
        assert_eq!(
            fs::read(report.path().join("plots").join(plot)).unwrap(),
            fs::read(run.path().join("plots").join(plot)).unwrap(),
            "{plot}"
        );
    }
}

#[test]
fn tune_writes_result_log_and_tuned_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlaw(&[
        "tune",
        "--scenario",
        "caseA",
        "--swarm",
        "3",
        "--iterations",
        "2",
        "--seed",
        "5",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tune_result.json")).unwrap()).unwrap();
    assert_eq!(result["evaluations"], 6);
    let log = fs::read_to_string(dir.path().join("tune_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    let tuned = dir.path().join("tuned_scenario.json");
    let out = qlaw(&["propagate", "--scenario", path_str(&tuned)]);
    assert!(out.status.success());
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    let best = result["best_summary"]["transfer_days"].as_f64().unwrap();
    assert_eq!(stdout["summary"]["transfer_days"].as_f64().unwrap(), best);
}

#[test]
fn pareto_writes_front_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlaw(&[
        "pareto",
        "--scenario",
        "caseA",
        "--thresholds",
        "0,0.5",
        "--swarm",
        "2",
        "--iterations",
        "1",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("pareto.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "eta_threshold,transfer_days,propellant_kg,w_a,w_e,w_i,zeta,converged,on_front"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1..].iter().any(|l| l.ends_with(",1")));
}

#[test]
fn validate_passes_on_pristine_checkout() {
    let out = qlaw(&["validate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
}

#[test]
fn help_documents_csv_columns() {
    let out = qlaw(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("t_s, a_km, e, i_deg"));
    assert!(text.contains("eta_r, eclipse (0/1), rp_km"));
}

fn preset_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/presets")
        .join(format!("{name}.json"))
}
