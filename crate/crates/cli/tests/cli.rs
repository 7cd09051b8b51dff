use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bigmarket(args: &[&str], spec: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bigmarket"))
        .args(args)
        .arg("--spec")
        .arg(spec)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn constant_claim_run_prices_at_face_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigmarket(&["run"], &fixture("constant.json"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let prices = std::fs::read_to_string(dir.path().join("prices.csv")).unwrap();
    let mut lines = prices.lines();
    assert_eq!(lines.next(), Some("n,p_n,residual,iterations"));
    for line in lines {
        let p: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((p - 1.0).abs() < 1e-7, "{line}");
    }
    let conv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(conv.starts_with("n,u_n,grad_norm,h_norm,cesaro_dist\n"));
    assert_eq!(conv.lines().count(), 5);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"]["all"], true);
}

#[test]
fn one_sided_factor_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigmarket(&["run"], &fixture("one_sided.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("market::validate_model: two-sided support"), "{err}");
}

#[test]
fn oversized_tail_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigmarket(&["run"], &fixture("big_tail.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("arbitrage::na_constant_large"), "{err}");
}

#[test]
fn grid_beyond_truncation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigmarket(&["validate"], &fixture("bad_grid.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_grid"));
}

#[test]
fn missing_spec_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigmarket(&["na"], &dir.path().join("absent.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stage_commands_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("table_call.json");
    for (cmd, key) in [("validate", "passed"), ("na", "constants"), ("bound", "M")] {
        let out = bigmarket(&[cmd], &spec, dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v.get(key).is_some(), "{cmd}: {v}");
    }
    let out = bigmarket(&["emm"], &spec, dir.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);

    let out = bigmarket(&["optimize"], &spec, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("convergence.csv").is_file());
    let out = bigmarket(&["price"], &spec, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("prices.csv").is_file());
}

#[test]
fn report_rerenders_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigmarket(&["run"], &fixture("table_call.json"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let conv = std::fs::read(dir.path().join("convergence.csv")).unwrap();
    let prices = std::fs::read(dir.path().join("prices.csv")).unwrap();
    std::fs::remove_file(dir.path().join("convergence.csv")).unwrap();
    std::fs::remove_file(dir.path().join("prices.csv")).unwrap();

    let out =
        Command::new(env!("CARGO_BIN_EXE_bigmarket")).arg("report").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("convergence.csv")).unwrap(), conv);
    assert_eq!(std::fs::read(dir.path().join("prices.csv")).unwrap(), prices);
}

#[test]
fn monte_carlo_backend_flag_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = fixture("table_call.json");
    for d in [&a, &b] {
        let out = Command::new(env!("CARGO_BIN_EXE_bigmarket"))
            .args(["optimize", "--backend", "mc", "--seed", "3", "--threads", "2", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(d.path())
            .output()
            .unwrap();
        assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read(a.path().join("convergence.csv")).unwrap(),
        std::fs::read(b.path().join("convergence.csv")).unwrap()
    );
}
