#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub fn xvad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xvad")).current_dir(dir).args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs a subcommand that must succeed and returns its parsed report after
/// checking it against the shipped schema.
pub fn ok(dir: &Path, args: &[&str]) -> Value {
    let o = xvad(dir, args);
    assert!(o.status.success(), "xvad {args:?} failed: {}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).expect("report is JSON");
    let command = report["command"].as_str().expect("command field").to_owned();
    validate(&report, &command);
    report
}

pub fn schema_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

pub fn violations(report: &Value, command: &str) -> Vec<String> {
    let path = schema_dir().join(format!("{command}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).expect("schema exists")).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(report).map(|e| e.to_string()).collect()
}

pub fn validate(report: &Value, command: &str) {
    let errors = violations(report, command);
    assert!(errors.is_empty(), "{command} report violates schema: {errors:?}\n{report:#}");
}

pub fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

pub fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
