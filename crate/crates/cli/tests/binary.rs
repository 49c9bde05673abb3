// SPDX-License-Identifier: Apache-2.0

use std::process::Command;

fn nvdyn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nvdyn"))
}

#[test]
fn validate_prints_effective_config() {
    let out = nvdyn().arg("validate").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[bath]"), "{text}");
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sequence]\nn_samples = 1\n").unwrap();
    let out = nvdyn().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_samples"));
}

#[test]
fn unknown_field_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[bath]\nsede = 3\n").unwrap();
    let out = nvdyn().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "[sequence]\nn_samples = 5\nduration = 5e-6\n").unwrap();
    let out = nvdyn().args(["run", "--config"]).arg(&cfg).arg("--output").arg(blocker.join("sub")).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_writes_json_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "[sequence]\nn_samples = 5\nduration = 5e-6\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = nvdyn()
        .args(["run", "--format", "json", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["non_markovianity"]["I"].is_number(), "{report}");
    assert!(out_dir.join("trajectory.json").exists());
}
