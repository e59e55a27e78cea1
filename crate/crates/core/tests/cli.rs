//! End-to-end checks of the `nifbm` binary.

use std::io::Write;
use std::process::{Command, Output, Stdio};

fn nifbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nifbm"))
        .args(args)
        .env_remove("NIFBM_OUTPUT_DIR")
        .output()
        .expect("spawn nifbm")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"
model = "one-nifbm"
hurst = 0.7
a2 = 1.0
mu = 4.0
drift = "benchmark"
drift_step = 1.0
h = [2.0]
n = [16, 32]
replications = 20
seed = 11
outputs = ["mu_hat", "mu_tilde"]
"#;

#[test]
fn constants_at_half() {
    let text = stdout(&nifbm(&["constants", "--H", "0.5", "--max-lag", "4"]));
    let gammas: Vec<f64> = text
        .lines()
        .skip(1)
        .take(5)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let want = [2.0 / 3.0, 1.0 / 6.0, 0.0, 0.0, 0.0];
    for (g, w) in gammas.iter().zip(want) {
        assert!((g - w).abs() < 1e-15);
    }
    let h0: f64 = text
        .lines()
        .find(|l| l.starts_with("H0,"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((h0 - 0.2626229).abs() < 1e-6);
    assert!(text.contains("s11,5.0000000000000000e-1"));
}

#[test]
fn simulate_is_reproducible_and_estimate_reads_it() {
    let args = [
        "simulate", "--H", "0.3", "--h", "2", "--n", "2048", "--seed", "5",
    ];
    let a = stdout(&nifbm(&args));
    let b = stdout(&nifbm(&args));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2049);

    let mut child = Command::new(env!("CARGO_BIN_EXE_nifbm"))
        .args(["estimate", "--model", "one-nifbm", "--h", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(a.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let h_hat = json["h_hat"].as_f64().unwrap();
    assert!((h_hat - 0.3).abs() < 0.1, "{h_hat}");
    assert!(json["a2_hat"].as_f64().unwrap() > 0.0);
    assert_eq!(json["degenerate"], false);
}

#[test]
fn simulate_two_process_needs_second_index() {
    let out = nifbm(&[
        "simulate",
        "--model",
        "two-nifbm",
        "--H",
        "0.3",
        "--h",
        "2",
        "--n",
        "8",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--H2"));
    let ok = nifbm(&[
        "simulate",
        "--model",
        "two-nifbm",
        "--H",
        "0.3",
        "--H2",
        "0.7",
        "--b2",
        "2",
        "--h",
        "2",
        "--n",
        "8",
        "--j",
        "4",
    ]);
    assert_eq!(stdout(&ok).lines().count(), 9);
}

#[test]
fn experiment_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = stdout(&nifbm(&["experiment", "--config", cfg]));
    let b = stdout(&nifbm(&["experiment", "--config", cfg]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);
    assert!(a.starts_with("model,estimator,H1,H2,a2,b2,mu,h,N,j_mode,"));

    let out = dir.path().join("rows.json");
    stdout(&nifbm(&[
        "experiment",
        "--config",
        cfg,
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["H2"], serde_json::Value::Null);
    assert_eq!(rows[0]["seconds"].as_f64(), Some(0.0));
}

#[test]
fn output_dir_variable_applies_to_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nifbm"))
        .args([
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "res.csv",
        ])
        .env("NIFBM_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    stdout(&out);
    assert!(dir.path().join("res.csv").exists());
}

#[test]
fn bad_config_reports_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, CONFIG.replace("hurst = 0.7", "hurst = 1.7")).unwrap();
    let out = nifbm(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hurst") && err.contains("bad.toml"), "{err}");

    std::fs::write(&cfg, format!("{CONFIG}\nsurprise = true\n")).unwrap();
    let out = nifbm(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("surprise") && err.contains("line"), "{err}");
}

#[test]
fn missing_config_file_names_path() {
    let out = nifbm(&["experiment", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.toml"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = nifbm(&["constants", "--H", "0.5", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(nifbm(&["tables", "--which", "7"]).status.code(), Some(2));
}

#[test]
fn tables_have_suite_structure() {
    let text = stdout(&nifbm(&[
        "tables",
        "--which",
        "1",
        "--replications",
        "3",
        "--seed",
        "42",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    // 5 Hurst values × 2 widths × 3 horizons × 2 estimators.
    assert_eq!(lines.len(), 1 + 60);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 16));
    assert!(lines[1..].iter().all(|l| l.contains(",direct-per-j,3,")));
}
