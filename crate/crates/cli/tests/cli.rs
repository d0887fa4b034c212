use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn lqp(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqp"))
        .args(args)
        .env("LQP_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], threads: &str) {
    let out = lqp(args, threads);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn manifest_files(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str::<serde_json::Value>(&text).unwrap()["files"].clone()
}

#[test]
fn converge_writes_table_with_slope_footer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark.toml");
    let out = dir.path().to_str().unwrap();
    run_ok(&["converge", "--config", cfg.to_str().unwrap(), "--paths", "200", "--out", out], "2");
    let text = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,ce_mc,ce_se,ce_formula,ratio");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("# slope="));
    let eps: Vec<f64> = lines[1..5].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(eps, vec![0.04, 0.02, 0.01, 0.005]);
    let files = manifest_files(dir.path());
    assert_eq!(files[0]["file"], "convergence.csv");
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let cfg = config("intraday.toml");
    let cfg = cfg.to_str().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = dir.path().to_str().unwrap();
        run_ok(&["simulate", "--config", cfg, "--paths", "40", "--seed", "9", "--out", out], threads);
    }
    assert_eq!(manifest_files(a.path()), manifest_files(b.path()));
    assert_eq!(
        std::fs::read(a.path().join("trades.csv")).unwrap(),
        std::fs::read(b.path().join("trades.csv")).unwrap()
    );
}

#[test]
fn impact_study_boundaries_shrink_by_one_minus_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark.toml");
    let out = dir.path().to_str().unwrap();
    run_ok(&["impact-study", "--config", cfg.to_str().unwrap(), "--paths", "50", "--out", out], "1");
    let text = std::fs::read_to_string(dir.path().join("impact.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let kappa = cells[0];
        assert!((cells[3] - (1.0 - kappa)).abs() < 1e-11, "{line}");
        assert!((cells[4] - (1.0 - kappa)).abs() < 1e-11, "{line}");
    }
}

#[test]
fn bad_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("benchmark.toml");
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(!lqp(&["explode", "--config", cfg, "--out", out], "1").status.success());

    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(cfg).unwrap().replace("vartheta = 0.5", "vartheta = 1.2");
    std::fs::write(&bad, text).unwrap();
    let r = lqp(&["welfare", "--config", bad.to_str().unwrap(), "--out", out], "1");
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("vartheta"));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("sub");
    let r = lqp(&["welfare", "--config", cfg, "--out", nested.to_str().unwrap()], "1");
    assert!(!r.status.success());
}
