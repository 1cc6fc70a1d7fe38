use std::fs;
use std::path::Path;
use std::process::Command;

use dicke_cli::{data_section, load_config, run_figure_job, CliError, FigureId, FigureJob};
use dicke_core::{AnglePolicy, ConfigError, ResetPolicy};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dicke-prep"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_loading() {
    let dir = tempfile::tempdir().unwrap();
    let c = load_config(&write(dir.path(), "a.json", r#"{"two_j": 20}"#)).unwrap();
    assert_eq!((c.two_j(), c.target_two_mt), (20, 0));
    assert_eq!(c.angle_policy, AnglePolicy::Geometric);
    assert_eq!(c.reset_policy, ResetPolicy::None);

    match load_config(&write(dir.path(), "b.json", r#"{"two_j": 20, "target_two_mt": 3}"#)) {
        Err(CliError::Config(ConfigError::Validation(v))) => assert_eq!(v[0].key, "target_two_mt"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        load_config(&write(dir.path(), "c.json", r#"{"two_j": 20, "seeed": 1}"#)),
        Err(CliError::Config(ConfigError::Parse(_)))
    ));
    assert!(matches!(load_config(&dir.path().join("missing.json")), Err(CliError::Io { .. })));
}

#[test]
fn fig2b_matrix_shape() {
    let dir = tempfile::tempdir().unwrap();
    let job = FigureJob::new(FigureId::Fig2b, Some(vec![100]), dir.path()).unwrap();
    let files = run_figure_job(&job, false).unwrap();
    let data = data_section(&files[0]).unwrap();
    let mut rdr = csv::Reader::from_reader(data.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 102);
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().skip(1).map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert_eq!(r.len(), 101);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn figure_job_validation() {
    assert!(FigureJob::new(FigureId::Fig2c, Some(vec![]), ".").is_err());
    assert!(FigureJob::new(FigureId::Fig2b, Some(vec![11]), ".").is_err());
    assert!(FigureJob::new(FigureId::Fig2d, Some(vec![11]), ".").is_ok());
}

#[test]
fn commands_write_files_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: &[&[&str]] = &[
        &["dmatrix", "--two-j", "4", "--theta", "0.3"],
        &["angles", "--two-j", "10", "--policy", "numeric-optimal"],
        &["chain", "--two-j", "10", "--policy", "approx-mt0", "--reset", "sqrt-j"],
        &["simulate", "--two-j", "10", "--runs", "500", "--engine", "statevector"],
        &["asymptotics", "--mode", "stationary-phase", "--two-j", "2000", "--two-m", "20"],
        &["asymptotics", "--mode", "contraction", "--two-j", "800"],
        &["asymptotics", "--mode", "moments", "--two-j", "400", "--two-m", "10"],
        &["husimi", "--two-j", "10", "--two-m", "-4", "--grid", "11"],
        &["geometry", "--pdf", "--two-j", "400", "--two-m", "10"],
        &["cavity", "--mode", "estimate", "--photons", "1000", "--reps", "50", "--weight", "3"],
        &["cavity", "--mode", "resolvability"],
        &["figure", "--id", "cavity-spectrum"],
    ];
    for args in cases {
        let st = bin().args(["--out-dir", out, "--seed", "3"]).args(*args).output().unwrap();
        assert!(st.status.success(), "{args:?}: {}", String::from_utf8_lossy(&st.stderr));
    }
    for f in ["dmatrix.csv", "angles.csv", "chain_matrix.csv", "simulate_summary.json", "husimi.csv", "geometry_pdf.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("simulate_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["data"]["n_runs"], 500);
    assert_eq!(summary["meta"]["config"]["protocol"]["seed"], 3);
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"two_j": 10, "bogus": true}"#);
    let st = bin().args(["--out-dir", out, "chain", "--config", bad.to_str().unwrap()]).output().unwrap();
    assert!(!st.status.success());
    assert!(String::from_utf8_lossy(&st.stderr).contains("bogus"));
    let st = bin().args(["--out-dir", out, "cavity", "--mode", "estimate", "--n-atoms", "100"]).output().unwrap();
    assert!(!st.status.success());
    let st = bin().args(["--out-dir", out, "--threads", "0", "husimi", "--two-j", "2", "--two-m", "0"]).output().unwrap();
    assert!(!st.status.success());
}

#[test]
fn threads_env_and_seed_reproducibility() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--no-timestamp", "--seed", "11", "simulate", "--two-j", "30", "--runs", "2000", "--reset", "sqrt-j"];
    let s1 = bin().arg("--out-dir").arg(a.path()).args(args).env("DICKE_PREP_THREADS", "1").output().unwrap().status;
    let s2 = bin().arg("--out-dir").arg(b.path()).args(args).env("DICKE_PREP_THREADS", "3").output().unwrap().status;
    assert!(s1.success() && s2.success());
    for f in ["simulate_summary.json", "simulate_histogram.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn timestamp_only_with_flag_absent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(bin().args(["--out-dir", out, "husimi", "--two-j", "2", "--two-m", "0"]).output().unwrap().status.success());
    assert!(fs::read_to_string(dir.path().join("husimi.csv")).unwrap().contains("# generated_unix: "));
    assert!(bin().args(["--out-dir", out, "--no-timestamp", "husimi", "--two-j", "2", "--two-m", "0"]).output().unwrap().status.success());
    assert!(!fs::read_to_string(dir.path().join("husimi.csv")).unwrap().contains("generated_unix"));
}
