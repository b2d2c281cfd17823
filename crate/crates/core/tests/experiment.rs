use std::fs;
use std::path::Path;

use emlab::experiment::{execute, parse_config, ExperimentConfig};
use emlab::kernels::{eval_f, eval_gamma, eval_k, eval_p, eval_s, KernelArgs};
use emlab::{EmError, QuadratureSpec};

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("emlab-experiment-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const COUPLED: &str = r#"{
    "command": "coupled",
    "model": {"theta_star": [0.6, 0.8]},
    "init": {"a": [0.3, -0.2], "b": [0.9, 0.2]},
    "n": 3000,
    "horizon": 15,
    "seed": 12,
    "export_data": true
}"#;

#[test]
fn parse_serialize_round_trip() {
    let cfg = parse_config(COUPLED).unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    let again: ExperimentConfig = parse_config(&text).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(serde_json::to_string(&again).unwrap(), text);
    // The normalized form carries every default explicitly.
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["stop", "quadrature", "n_ladder", "trials", "grid", "slice", "parameterization"] {
        assert!(value.get(key).is_some(), "{key} missing from normalized config");
    }
}

#[test]
fn outputs_are_byte_identical_and_carry_provenance() {
    let cfg = parse_config(COUPLED).unwrap();
    let (x, y) = (tmp("bytes-a"), tmp("bytes-b"));
    let rx = execute(&cfg, &x).unwrap();
    execute(&cfg, &y).unwrap();
    assert_eq!(rx.files.len(), 5);
    assert_eq!(read_all(&x), read_all(&y));

    let hash = cfg.hash();
    for (name, bytes) in read_all(&x) {
        let text = String::from_utf8(bytes).unwrap();
        if name.ends_with(".csv") {
            if name == "data.csv" {
                // The dataset preamble names the generator inputs instead.
                assert!(text.contains("# seed=12"));
                continue;
            }
            assert!(text.starts_with(&format!("# config_sha256={hash}\n# version=emlab ")), "{name}");
            assert!(text.contains("# quadrature=nodes_per_lobe:128;abs_tol:1e-12;truncation_radius:12"), "{name}");
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["provenance"]["config_sha256"], hash);
            assert_eq!(v["provenance"]["quadrature"]["nodes_per_lobe"], 128);
            assert_eq!(parse_config(&v["provenance"]["config"].to_string()).unwrap(), cfg);
        }
    }
    fs::remove_dir_all(&x).unwrap();
    fs::remove_dir_all(&y).unwrap();
}

#[test]
fn hash_tracks_the_config() {
    let a = parse_config(COUPLED).unwrap();
    let mut b = a.clone();
    b.seed += 1;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash(), parse_config(COUPLED).unwrap().hash());
}

#[test]
fn fixed_point_gives_one_row() {
    let cfg = parse_config(r#"{"command":"run-population","model":{"theta_star":[1.0,-0.5]},"init":{"a":[0,0],"b":[1.0,-0.5]}}"#).unwrap();
    let dir = tmp("fixed");
    execute(&cfg, &dir).unwrap();
    let text = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 2);
    assert!(body[0].starts_with("t,norm_a,dist_b,beta,sin_beta,p,ratio_a,ratio_b,ratio_sin"));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn kernel_table_spot_rows() {
    let cfg = parse_config(r#"{"command":"kernels"}"#).unwrap();
    let dir = tmp("kernels");
    execute(&cfg, &dir).unwrap();
    let text = fs::read_to_string(dir.join("kernels.csv")).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["x_a", "x_b", "x_theta", "P", "Gamma", "S", "F", "K"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8000);
    let s = QuadratureSpec::default();
    for i in [0, 1, 419, 1234, 2718, 3141, 4000, 5555, 6789, 7999] {
        let r = &rows[i];
        let args = KernelArgs::new(r[0], r[1], r[2]).unwrap();
        let want = [
            eval_p(args, &s).unwrap(),
            eval_gamma(args, &s).unwrap(),
            eval_s(args, &s).unwrap(),
            eval_f(r[1], r[2], &s).unwrap(),
            eval_k(r[0], r[1], &s).unwrap(),
        ];
        assert_eq!(&r[3..], &want[..], "row {i}");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_name_fields() {
    let cases = [
        (r#"{"command":"run-population","model":{"theta_star":[1.0]},"init":{"theta":[1.0, 2.0]}}"#, "init.theta"),
        (r#"{"command":"run-sample","model":{"theta_star":[1.0]}}"#, "init"),
        (r#"{"command":"coupled","model":{"theta_star":[1.0],"extra":1},"init":{"theta":[1.0]}}"#, "model.extra"),
        (r#"{"command":"consistency","model":{"theta_star":[1.0]},"init":{"theta":[1.0]},"n_ladder":[10,5]}"#, "n_ladder"),
        (r#"{"command":"kernels","stop":{"max_iters":0}}"#, "stop.max_iters"),
        (r#"{"command":"kernels","quadrature":{"nodes_per_lobe":0}}"#, "quadrature.nodes_per_lobe"),
        (r#"{"command":"verify","criteria":[14]}"#, "criteria"),
        (r#"{"command":"landscape","model":{"theta_star":[1.0],"d":2}}"#, "model.d"),
        (r#"{"command":"fly"}"#, "command"),
    ];
    for (text, want) in cases {
        match parse_config(text) {
            Err(EmError::Config { path, .. }) => assert_eq!(path, want, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn model1_and_landscape_commands_write_their_files() {
    let dir = tmp("model1");
    let cfg = parse_config(
        r#"{"command":"run-sample","parameterization":"model1","model":{"theta_star":[1.0]},"init":{"theta":[0.5]},"n":5000}"#,
    )
    .unwrap();
    execute(&cfg, &dir).unwrap();
    let text = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(text.lines().any(|l| l == "t,error,theta1"));

    let cfg = parse_config(r#"{"command":"landscape","model":{"theta_star":[0.6,0.8]},"slice":{"points":3,"span":0.5}}"#).unwrap();
    let report = execute(&cfg, &dir).unwrap();
    assert!(report.files.iter().any(|f| f.ends_with("slice.csv")));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("stationary.json")).unwrap()).unwrap();
    assert_eq!(v["points"]["zero"]["report"]["classification"], "SADDLE");
    assert_eq!(v["points"]["plus_theta"]["report"]["classification"], "MAX");
    assert_eq!(v["points"]["plus_theta"]["fixed_iff_stationary"], true);
    fs::remove_dir_all(&dir).unwrap();
}
