use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn emlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emlab")).args(args).current_dir(dir).env_remove("EMLAB_THREADS").output().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn population_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"command":"run-population","model":{"theta_star":[1.0,0.5]},"init":{"a":[0.3,0.1],"b":[0.6,-0.2]}}"#,
    )
    .unwrap();
    let out = emlab(&["run-population", "--config", "cfg.json", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("res/trajectory.csv")).unwrap();
    assert!(csv.starts_with("# config_sha256="));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["predicted_limit"], "PLUS_THETA");
}

#[test]
fn seed_flag_overrides_the_config_and_threads_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"command":"run-sample","model":{"theta_star":[0.6,0.8]},"init":{"a":[0,0],"b":[0.5,0.5]},"n":20000,"seed":3}"#,
    )
    .unwrap();
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec!["run-sample", "--config", "cfg.json", "--out", out];
        args.extend_from_slice(extra);
        let o = emlab(&args, dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(out).join("trajectory.csv")).unwrap()
    };
    let base = run("a", &[]);
    assert_eq!(run("b", &["--threads", "3"]), base);
    assert_eq!(run("c", &["--seed", "3"]), base);
    assert_ne!(run("d", &["--seed", "4"]), base);

    let via_env = Command::new(env!("CARGO_BIN_EXE_emlab"))
        .args(["run-sample", "--config", "cfg.json", "--out", "e"])
        .current_dir(dir.path())
        .env("EMLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(via_env.status.success());
    assert_eq!(fs::read(dir.path().join("e/trajectory.csv")).unwrap(), base);
}

#[test]
fn errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"command":"run-population","model":{"theta_star":[1.0]},"init":{"a":[0],"b":[1,2]}}"#)
        .unwrap();
    let out = emlab(&["run-population", "--config", "bad.json"], dir.path());
    assert!(!out.status.success());
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "config_error");
    assert_eq!(e["error"]["path"], "init.b");

    fs::write(dir.path().join("good.json"), r#"{"command":"run-population","model":{"theta_star":[1.0]},"init":{"theta":[0.5]}}"#).unwrap();
    let out = emlab(&["coupled", "--config", "good.json"], dir.path());
    assert_eq!(error_json(&out)["error"]["path"], "command");

    let out = emlab(&["run-population", "--config", "missing.json"], dir.path());
    assert_eq!(error_json(&out)["error"]["kind"], "io_error");

    let out = emlab(&["run-population"], dir.path());
    assert_eq!(error_json(&out)["error"]["path"], "model");

    fs::write(dir.path().join("weights.json"), r#"{"command":"run-population","model":{"theta_star":[1.0]},"init":{"a":[60],"b":[40]}}"#)
        .unwrap();
    let out = emlab(&["run-population", "--config", "weights.json"], dir.path());
    assert_eq!(error_json(&out)["error"]["kind"], "degenerate_weights");
}

#[test]
fn kernels_without_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = emlab(&["kernels", "--out", "k"], dir.path());
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("k/kernels.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 8001);
}

#[test]
fn verify_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("v.json"), r#"{"command":"verify","criteria":[2,11,13]}"#).unwrap();
    let out = emlab(&["verify", "--config", "v.json", "--out", "v"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    let rows: Vec<&str> = stdout.lines().filter(|l| l.starts_with('C')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|l| l.contains(" PASS ")));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("v/verify.json")).unwrap()).unwrap();
    assert_eq!(v["all_passed"], true);
}
