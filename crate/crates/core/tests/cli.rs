use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_unishift");

const BASE: &str = r#"{"grid": {"modes": 2, "levels": 16}, "weights": {"law": "constant", "value": 1.0}, "depth": 4,
    "eigen": {"samples": 20}, "orbit": {"steps": 20000, "checkpoints": 20},
    "gaussian": {"samples": 2000, "orbit_length": 100, "birkhoff_samples": 20},
    "transfer": {"samples": 20, "n_max": 32, "pushforward_samples": 2000}}"#;

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn build_succeeds_and_reports_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let out = dir.path().join("out");
    let o = run("build", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("build_report.json")).unwrap()).unwrap();
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(report["header"]["config_sha256"].as_str().unwrap().len() == 64);
    let csv = fs::read_to_string(out.join("build_report.csv")).unwrap();
    assert!(csv.starts_with("# unishift 0.1.0 config_sha256="));
}

#[test]
fn every_command_passes_on_a_valid_build() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let out = dir.path().join("out");
    assert_eq!(run("build", &cfg, &out, &[]).status.code(), Some(0));
    for cmd in ["verify", "eigen", "orbit", "gaussian", "transfer"] {
        let o = run(cmd, &cfg, &out, &["--threads", "2"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
    assert!(out.join("eigen_residuals.csv").exists());
    assert!(out.join("eigen.json").exists());
    assert!(out.join("nuclearity.csv").exists());
}

#[test]
fn degenerate_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &BASE.replace("\"levels\": 16", "\"levels\": 1"));
    let o = run("build", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &BASE.replace("\"depth\": 4", "\"depth\": 4, \"tolerances\": {\"eigen_relativ\": 1}"));
    let o = run("build", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("eigen_relativ") && err.contains("line"), "{err}");
}

#[test]
fn missing_sequence_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let o = run("eigen", &cfg, &dir.path().join("nowhere"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing sequence file"));
}

#[test]
fn periodic_rejects_generic_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let out = dir.path().join("out");
    run("build", &cfg, &out, &[]);
    let o = run("periodic", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsupported-mode"));
}

#[test]
fn periodic_on_roots_of_unity() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"grid": {"modes": 2, "levels": 8}, "weights": {"law": "constant", "value": 3.0}, "depth": 3,
        "mode": "roots_of_unity"}"#;
    let cfg = config(dir.path(), body);
    let out = dir.path().join("out");
    assert_eq!(run("build", &cfg, &out, &[]).status.code(), Some(0));
    let o = run("periodic", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("periodic.json")).unwrap()).unwrap();
    assert!(v["period"].as_u64().unwrap() >= 1);
    assert!(v["period_defect"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn fixed_point_orbit_has_density_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &BASE.replace("\"steps\": 20000,", "\"steps\": 5000, \"start\": \"fixed_point\","));
    let out = dir.path().join("out");
    run("build", &cfg, &out, &[]);
    let o = run("orbit", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("orbit.json")).unwrap()).unwrap();
    assert!(v["lower_density"].as_array().unwrap().iter().all(|d| d.as_f64() == Some(1.0)));
    let csv = fs::read_to_string(out.join("orbit.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("step,target_id,visits,running_frequency"));
}

#[test]
fn tolerance_breach_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &BASE.replace("\"depth\": 4", "\"depth\": 4, \"tolerances\": {\"eigen_relative\": 1e-300}"));
    let out = dir.path().join("out");
    run("build", &cfg, &out, &[]);
    let o = run("eigen", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL eigen_equation"));
}

#[test]
fn format_and_thread_options() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let out = dir.path().join("out");
    let o = Command::new(BIN)
        .args(["build", "--format", "csv", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("UNISHIFT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("build_report.csv").exists());
    assert!(!out.join("build_report.json").exists());
    assert!(out.join("sequence.json").exists());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        run("build", &cfg, out, &[]);
        assert_eq!(run("gaussian", &cfg, out, &["--threads", threads]).status.code(), Some(0));
    }
    for f in ["sequence.json", "gaussian.json", "gaussian_ks.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), BASE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run("build", &cfg, &a, &["--seed", "1"]);
    run("build", &cfg, &b, &["--seed", "2"]);
    let sa = fs::read_to_string(a.join("sequence.json")).unwrap();
    assert!(sa.contains("\"seed\": 1"));
    assert_ne!(sa, fs::read_to_string(b.join("sequence.json")).unwrap());
}
