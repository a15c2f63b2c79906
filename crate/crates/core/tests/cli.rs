use std::fs;
use std::path::Path;
use std::process::Command;

use ptube::cli::{list_experiments, main_with_args, parse_config};
use ptube::Error;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(dir: &Path, text: &str, extra: &[&str]) -> i32 {
    let config = write_config(dir, text);
    let out = dir.join("out");
    let mut args = vec![
        "ptube",
        "run",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    main_with_args(args)
}

const INTERVAL: &str = r#"
experiment = "cross-section"
geometry.shape = "interval"
geometry.length = 1
numerics.p = 2.0
"#;

#[test]
fn interval_example_passes_near_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(dir.path(), INTERVAL, &["--seed-oracle", "--mesh-out"]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    let lambda = report["quantities"]["lambda1_section"].as_f64().unwrap();
    assert!((lambda - 9.8696).abs() / 9.8696 < 0.01, "λ₁ = {lambda}");
    assert!(report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["passed"] == true));
    assert!(dir.path().join("out/oracle.json").exists());
    assert!(dir.path().join("out/timings.json").exists());
    let mesh = fs::read_to_string(dir.path().join("out/cross_section.mesh")).unwrap();
    assert!(mesh.starts_with("nodes 21 elements 20 dim 1"));
}

#[test]
fn report_is_reproducible_apart_from_timestamp() {
    let strip = |text: String| -> String {
        text.lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path(), INTERVAL, &[]), 0);
    assert_eq!(run(b.path(), INTERVAL, &[]), 0);
    let ra = fs::read_to_string(a.path().join("out/report.json")).unwrap();
    let rb = fs::read_to_string(b.path().join("out/report.json")).unwrap();
    assert!(ra.contains("\"timestamp\""));
    assert_eq!(strip(ra), strip(rb));
}

#[test]
fn twisted_disk_is_rejected() {
    let text = r#"
experiment = "twist-hardy"
geometry.shape = "disk"
geometry.twist = "constant 1"
numerics.p = 2
"#;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), text, &[]), 1);
    match parse_config(text) {
        Err(Error::Config(msg)) => assert!(msg.contains("circular"), "{msg}"),
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn missing_exponent_names_the_key() {
    let text = "experiment = \"straight\"\ngeometry.shape = \"interval\"\n";
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), text, &[]), 1);
    let msg = parse_config(text).unwrap_err().to_string();
    assert!(msg.contains("numerics.p"), "{msg}");
}

#[test]
fn exponent_outside_range_cites_range() {
    for p in ["1.05", "10.5"] {
        let text =
            format!("experiment = \"straight\"\ngeometry.shape = \"interval\"\nnumerics.p = {p}\n");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("[1.1, 10]"), "{msg}");
    }
}

#[test]
fn unknown_keys_are_listed() {
    let text = format!("{INTERVAL}\nnumerics.lenghts = [1.0]\ntwist.depth = 3\n");
    let msg = parse_config(&text).unwrap_err().to_string();
    assert!(
        msg.contains("numerics.lenghts") && msg.contains("twist.depth"),
        "{msg}"
    );
}

#[test]
fn nested_tables_read_like_dotted_keys() {
    let text = "experiment = \"cross-section\"\n[geometry]\nshape = \"interval 2\"\n[numerics]\np = 3\nh = 0.1\n";
    assert!(parse_config(text).is_ok());
}

#[test]
fn listing_is_stable_and_complete() {
    let a = list_experiments();
    assert_eq!(a, list_experiments());
    let names: Vec<&str> = a
        .lines()
        .filter(|l| !l.starts_with(' '))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "cross-section",
            "straight",
            "criticality",
            "essential",
            "bend",
            "twist-hardy"
        ]
    );
    assert_eq!(a.matches("required:").count(), 6);
    assert_eq!(main_with_args(["ptube", "list"]), 0);
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_ptube");
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), INTERVAL);
    let status = Command::new(exe)
        .args(["run", "--config", &config, "--out"])
        .arg(dir.path().join("bin-out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(exe)
        .args(["run", "--config", "/nonexistent.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let status = Command::new(exe).arg("--bogus").status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn failing_verdict_exits_with_two() {
    // A straight tube cannot get within 0.01 % of the cross-section threshold at L = 2.
    let text = r#"
experiment = "straight"
geometry.shape = "interval"
numerics.p = 2
numerics.h = 0.1
numerics.h_s = 0.1
numerics.lengths = [2.0]
numerics.cutoffs = [2, 4]
verdict.gap_fraction = 1e-4
"#;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), text, &[]), 2);
}
