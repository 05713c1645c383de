use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dform"))
        .args(args)
        .env_remove("DFORM_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TRIANGLES: &str = r#"{
  "version": "dform/1",
  "forms": [{
    "labels": ["a", "b", "c", "d", "e", "f"],
    "measure": [1, 2, 1, 0.5, 1, 1],
    "conductances": [
      {"x": "a", "y": "c", "value": 1}, {"x": "c", "y": "e", "value": 1}, {"x": "a", "y": "e", "value": 1},
      {"x": "b", "y": "d", "value": 2}, {"x": "d", "y": "f", "value": 2}, {"x": "b", "y": "f", "value": 2}
    ],
    "killing": [0, 0, 0, 0.5, 0, 0]
  }]
}"#;

fn synthesized(dir: &TempDir, seed: u64) -> PathBuf {
    let out = dform(&[
        "synthesize",
        "--seed",
        &seed.to_string(),
        "--states",
        "12",
        "--components",
        "3",
    ]);
    assert!(out.status.success());
    write(dir, &format!("synth{seed}.json"), &stdout(&out))
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.json", TRIANGLES);
    let out = dform(&["validate", arg(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("valid"));

    let bad = write(
        &dir,
        "bad.json",
        &TRIANGLES.replace("\"value\": 2}", "\"value\": -2}"),
    );
    assert_eq!(dform(&["validate", arg(&bad)]).status.code(), Some(1));

    let broken = write(&dir, "broken.json", "{ not json");
    assert_eq!(dform(&["validate", arg(&broken)]).status.code(), Some(1));
}

#[test]
fn missing_file_is_io_error() {
    let out = dform(&["validate", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = dform(&["--json", "decompose", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "io");
    assert_eq!(v["error"]["exit_code"], 3);
}

#[test]
fn decompose_two_triangles() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "t.json", TRIANGLES);
    let out = dform(&["--json", "decompose", arg(&file)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["components"].as_array().unwrap().len(), 2);
    assert_eq!(v["components"][0], serde_json::json!(["a", "c", "e"]));
}

#[test]
fn identity_instance_intertwines_with_zero_residual() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "t.json", TRIANGLES);
    let out = dform(&["--json", "check-intertwine", arg(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["residual"].as_f64(), Some(0.0));
    assert_eq!(v["intertwines"], true);
}

#[test]
fn random_iso_fails_intertwining_check() {
    let dir = TempDir::new().unwrap();
    let out = dform(&[
        "generate",
        "--kind",
        "iso",
        "--seed",
        "3",
        "--states",
        "8",
        "--components",
        "2",
    ]);
    let file = write(&dir, "iso.json", &stdout(&out));
    let out = dform(&["check-intertwine", arg(&file)]);
    assert_eq!(out.status.code(), Some(2));
    // A loose enough threshold accepts anything.
    let out = dform(&["check-intertwine", arg(&file), "--tol", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let out = dform(&["--json", "factorize", arg(&file)]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["error"]["kind"], "rejected");
}

#[test]
fn factorize_recovers_synthesized_triple() {
    let dir = TempDir::new().unwrap();
    for seed in [1, 2, 3] {
        let file = synthesized(&dir, seed);
        let out = dform(&["--json", "factorize", arg(&file)]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["expected"]["matches"], true);
        assert_eq!(v["components"].as_array().unwrap().len(), 3);
        let pretty = dform(&["--pretty", "factorize", arg(&file)]);
        let w: Value = serde_json::from_str(&stdout(&pretty)).unwrap();
        assert_eq!(v, w);
        let text = dform(&["factorize", arg(&file)]);
        assert!(stdout(&text).contains("matches expected: true"));
    }
}

#[test]
fn synthesize_is_byte_deterministic() {
    let args = [
        "synthesize",
        "--seed",
        "9",
        "--states",
        "10",
        "--components",
        "2",
    ];
    let a = dform(&args);
    let b = dform(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn synthesize_rejects_infeasible_parameters() {
    let out = dform(&[
        "synthesize",
        "--seed",
        "1",
        "--states",
        "2",
        "--components",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn serialization_round_trips_through_files() {
    let dir = TempDir::new().unwrap();
    let file = synthesized(&dir, 4);
    let text = std::fs::read_to_string(&file).unwrap();
    let parsed = dform::Instance::parse(&text).unwrap();
    assert_eq!(parsed.to_json(), text);
}

#[test]
fn htransform_inline_and_file() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "t.json", TRIANGLES);
    let out = dform(&["htransform", arg(&file), "--h", "1,1,1,1,1,1"]);
    assert!(out.status.success());
    let inst = dform::Instance::parse(&stdout(&out)).unwrap();
    let original = dform::Instance::parse(TRIANGLES).unwrap();
    assert_eq!(
        inst.source().conductances(),
        original.source().conductances()
    );

    let hfile = write(
        &dir,
        "h.json",
        r#"{"a": 2, "c": 2, "e": 2, "b": 1, "d": 1, "f": 1}"#,
    );
    let out = dform(&["htransform", arg(&file), "--h", arg(&hfile)]);
    assert!(out.status.success());
    let inst = dform::Instance::parse(&stdout(&out)).unwrap();
    assert_eq!(inst.source().space().measure()[0], 4.0);

    let out = dform(&["htransform", arg(&file), "--h", "[1, 1, 3, 1, 1, 1]"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dform(&["htransform", arg(&file), "--h", "1,1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tolerance_env_override() {
    let dir = TempDir::new().unwrap();
    let out = dform(&["generate", "--kind", "iso", "--seed", "5", "--states", "6"]);
    let file = write(&dir, "iso.json", &stdout(&out));
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_dform"))
            .args(["check-intertwine", arg(&file)])
            .env("DFORM_TOL", tol)
            .output()
            .unwrap()
    };
    assert_eq!(run("1e-9").status.code(), Some(2));
    assert_eq!(run("100").status.code(), Some(0));
    assert_eq!(run("abc").status.code(), Some(1));
}

#[test]
fn selftest_runs_and_reports_json() {
    let out = dform(&["--json", "selftest", "--cases", "5", "--seed", "2"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 7);
    assert!(v.as_array().unwrap().iter().all(|r| r["failures"] == 0));
    let again = dform(&["--json", "selftest", "--cases", "5", "--seed", "2"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn reads_instance_from_stdin() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_dform"))
        .args(["decompose", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(TRIANGLES.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("2 components"));
}
