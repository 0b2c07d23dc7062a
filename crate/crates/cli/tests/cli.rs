use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn relax(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relax"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = relax(args, cwd);
    assert!(
        out.status.success(),
        "relax {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn example1_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "example1", "--dx", "2^-7", "--out", "o"],
        dir.path(),
    );
    let o = dir.path().join("o");
    for f in [
        "solution.csv",
        "diagnostics.csv",
        "measure.json",
        "report.json",
    ] {
        assert!(o.join(f).is_file(), "{f} missing");
    }
    let r = json(o.join("report.json"));
    assert_eq!(r["n_cells"], 128);
    assert_eq!(r["converged"], true);
    assert!((r["final_energy"].as_f64().unwrap() - 0.5013).abs() < 2e-3);
    assert!((r["oracle_energy"].as_f64().unwrap() - 0.505445).abs() < 1e-5);
    let sol = fs::read_to_string(o.join("solution.csv")).unwrap();
    assert_eq!(sol.lines().next(), Some("x,u,ux,d,b"));
    assert_eq!(sol.lines().count(), 1 + 129);
}

#[test]
fn example2_minus_branch() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "example2", "--init", "minus", "--out", "o"],
        dir.path(),
    );
    let r = json(dir.path().join("o/report.json"));
    assert!((r["final_energy"].as_f64().unwrap() - 1.0234).abs() < 2e-3);
    assert_eq!(r["config"]["init"], "minus");
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "example4", "--dx", "2^-6", "--out", "a"],
        dir.path(),
    );
    ok(
        &["run", "example4", "--dx", "2^-6", "--out", "b"],
        dir.path(),
    );
    for f in [
        "solution.csv",
        "diagnostics.csv",
        "measure.json",
        "report.json",
    ] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
}

#[test]
fn malformed_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"experiment":"example1","gama":2}"#,
    )
    .unwrap();
    let out = relax(&["run", "bad.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(rec["error"]["kind"], "config");
    assert!(rec["error"]["message"].as_str().unwrap().contains("gama"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn spacing_that_does_not_divide_the_domain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = relax(
        &["run", "example1", "--dx", "0.3", "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_target_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = relax(&["run", "example9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "run", "example3", "--dx", "2^-6", "--init", "minus", "--out", "o",
        ],
        dir.path(),
    );
    let schema: Value =
        serde_json::from_slice(&ok(&["schema", "report"], dir.path()).stdout).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let report = json(dir.path().join("o/report.json"));
    if let Err(errs) = compiled.validate(&report) {
        let msgs: Vec<String> = errs.map(|e| e.to_string()).collect();
        panic!("report does not match schema: {msgs:?}");
    }
    // something the schema must reject
    let mut broken = report.clone();
    broken["converged"] = Value::from("yes");
    assert!(!compiled.is_valid(&broken));
}

#[test]
fn report2d_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "example6", "--dx", "0.25", "--out", "o"],
        dir.path(),
    );
    let o = dir.path().join("o");
    for f in ["field.csv", "grid.json", "diagnostics.csv", "report.json"] {
        assert!(o.join(f).is_file(), "{f} missing");
    }
    let schema: Value =
        serde_json::from_slice(&ok(&["schema", "report2d"], dir.path()).stdout).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let report = json(o.join("report.json"));
    assert!(compiled.is_valid(&report));
    assert_eq!(report["n"], 8);
    // 9 x 9 nodes plus a header
    let field = fs::read_to_string(o.join("field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 81);
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["sweep", "example1", "--dx-list", ""], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("dx,final_energy"));
}

#[test]
fn sweep_rows_follow_the_list() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "sweep",
            "example1",
            "--dx-list",
            "2^-6,2^-5",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    let mut rd = csv::Reader::from_path(dir.path().join("s.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "0.015625");
    assert_eq!(&rows[1][0], "0.03125");
    let e: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    // finer grids come closer to the continuum value from below
    assert!(e[1] < e[0] && e[0] < 0.505445);
}

#[test]
fn oracle_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["oracle", "example1", "--out", "or"], dir.path());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["x_star"].as_f64().unwrap() - 0.40386).abs() < 1e-4);
    assert!((r["energy"].as_f64().unwrap() - 0.505445).abs() < 1e-5);
    assert!(dir.path().join("or/trajectory.csv").is_file());
    assert_eq!(json(dir.path().join("or/oracle.json")), r);
}

#[test]
fn custom_problem_runs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"experiment":"custom","dx":"2^-6","domain":[0,1],
            "bc":{"type":"dirichlet","left":0,"right":0.5},
            "w":{"kind":"builtin","name":"double_well","range":[-3,3]},
            "v":{"form":"quadratic_tracking","g":0.25}}"#,
    )
    .unwrap();
    ok(&["run", "c.json", "--out", "o"], dir.path());
    let r = json(dir.path().join("o/report.json"));
    assert_eq!(r["experiment"], "custom");
    assert_eq!(r["converged"], true);
    assert!(r.get("oracle_energy").is_none());
    // the envelope vanishes on [-1, 1]; only tracking near the pinned ends costs energy
    let e = r["final_energy"].as_f64().unwrap();
    assert!(e > 0.0 && e < 0.05, "{e}");
}

#[test]
fn warm_start_from_a_solution_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["run", "example1", "--dx", "2^-6", "--out", "a"],
        dir.path(),
    );
    ok(
        &[
            "run",
            "example1",
            "--dx",
            "2^-6",
            "--init",
            "a/solution.csv",
            "--out",
            "b",
        ],
        dir.path(),
    );
    let a = json(dir.path().join("a/report.json"))["final_energy"]
        .as_f64()
        .unwrap();
    let b = json(dir.path().join("b/report.json"))["final_energy"]
        .as_f64()
        .unwrap();
    assert!((a - b).abs() < 1e-8);
}
