use std::process::{Command, Output};

fn xcghmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xcghmc"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn sample_prints_csv_with_header() {
    let out = xcghmc(&[
        "sample",
        "--target",
        "gaussian",
        "--dims",
        "2",
        "--dt",
        "0.3",
        "--steps",
        "4",
        "--transitions",
        "20",
        "--burn-in",
        "5",
        "--momenta",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("transition,slot,dt,x0,x1,y0,y1"));
    assert_eq!(lines.count(), 21);
}

#[test]
fn sample_json_reports_slots() {
    let out = xcghmc(&[
        "sample",
        "--target",
        "double_well",
        "--dims",
        "2",
        "--dt",
        "0.4",
        "--steps",
        "3",
        "--extra-chances",
        "2",
        "--budget",
        "4000",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let slots = v["slots"].as_object().unwrap();
    assert_eq!(slots.len(), 4);
    assert!(v["force_evals"].as_u64().unwrap() >= 4000);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&xcghmc(&["sample"])), 1);
    assert_eq!(
        code(&xcghmc(&["sample", "--dt", "0.1", "--sin-psi", "0"])),
        1
    );
    assert_eq!(
        code(&xcghmc(&["sample", "--dt", "0.1", "--target", "nonane"])),
        1
    );
    assert_eq!(code(&xcghmc(&["verify", "--suite", "nope"])), 1);
    assert_eq!(
        code(&xcghmc(&["sweep", "--spec", "/nonexistent/spec.json"])),
        3
    );
    assert_eq!(code(&xcghmc(&["--help"])), 0);
}

#[test]
fn bad_spec_exits_with_one_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"target":"gaussian","dims":1,"sweep":"dt","values":[0.1],"fixed":{"psi":2.0}}"#,
    )
    .unwrap();
    let out = xcghmc(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("psi"));
}

#[test]
fn verify_suite_passes() {
    let out = xcghmc(&["verify", "--suite", "lahmc_equivalence"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("PASS"), "{text}");
}

#[test]
fn sweep_then_plot_data_then_ess() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &spec,
        r#"{"target":"gaussian","dims":1,"sweep":"dt","values":[0.2,0.4],
            "fixed":{"L":5},"replicas":2,"budget_force_evals":3000,"burn_in":20,"seed":3}"#,
    )
    .unwrap();
    let out = xcghmc(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary = out_dir.join("summary.json");
    let out = xcghmc(&["plot-data", "--summary", summary.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,ess_mean,ess_std,ess_stderr");
    assert_eq!(lines.len(), 3);

    let csv = out_dir.join("samples").join("point01_replica00.csv");
    let out = xcghmc(&["ess", "--input", csv.to_str().unwrap(), "--column", "x0"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["ess"].as_f64().unwrap() > 0.0);

    let out = xcghmc(&["ess", "--input", csv.to_str().unwrap(), "--column", "x9"]);
    assert_eq!(code(&out), 1);
}
