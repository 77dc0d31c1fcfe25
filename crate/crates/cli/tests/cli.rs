use std::path::Path;
use std::process::{Command, Output};

use kgres_cli::run::blob_sha256;
use kgres_cli::{builtin, Manifest, Report};

fn kgres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgres")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_pair(dir: &Path) -> std::path::PathBuf {
    let mut c = builtin("coupled-pair").unwrap();
    c.name = "small-pair".into();
    c.grid.half_length = 40.0;
    c.grid.points = 1024;
    c.time.t_final = 20.0;
    c.time.snapshots = vec![20.0];
    c.profile = None;
    c.fits.window = None;
    c.checks = Default::default();
    let path = dir.join("small.toml");
    std::fs::write(&path, c.to_toml()).unwrap();
    path
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn scenarios_lists_builtins() {
    let out = kgres(&["scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    for name in ["coupled-pair", "four-wave", "forced-resonant", "dissipative-resonant"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn written_scenarios_load_back() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(kgres(&["scenarios", "--write", tmp.path().to_str().unwrap()]).status.success());
    let path = tmp.path().join("four-wave.toml");
    let out = kgres(&["reduce", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
}

#[test]
fn run_is_deterministic_and_manifest_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_pair(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out_dir in [&a, &b] {
        let out = kgres(&["--quiet", "--out", out_dir.to_str().unwrap(), "run", cfg.to_str().unwrap()]);
        assert!(out.status.code() == Some(0), "{}", stderr(&out));
    }
    let series = |d: &Path| std::fs::read(d.join("small-pair").join("series.csv")).unwrap();
    assert_eq!(series(&a), series(&b));
    let snap = |d: &Path| std::fs::read(d.join("small-pair").join("state_20.000.bin")).unwrap();
    assert_eq!(snap(&a), snap(&b));

    let dir = a.join("small-pair");
    let m = read_manifest(&dir);
    assert!(m.config.time.dt.is_some());
    assert_eq!(m.config.fits.window, Some([10.0, 20.0]));
    assert_eq!(m.config.checks.components, Some(vec![1, 2]));
    assert_eq!(m.config.output.as_deref(), Some(dir.as_path()));
    assert_eq!(m.effective.t_reached, 20.0);
    let text = std::fs::read_to_string(dir.join("config.toml")).unwrap();
    assert_eq!(m.config_sha256, blob_sha256(&text));
    for f in &m.files {
        assert!(dir.join(f).exists(), "{f} listed but missing");
    }
    assert!(m.stages.iter().any(|s| s.name == "solve"));

    // rerunning the resolved config lands in the recorded directory and
    // reproduces the series
    let before = series(&a);
    let c = tmp.path().join("c");
    let out = kgres(&["--quiet", "--out", c.to_str().unwrap(), "run", dir.join("config.toml").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(!c.exists());
    assert_eq!(before, series(&a));
    assert_eq!(read_manifest(&dir).config_sha256, m.config_sha256);
}

#[test]
fn fit_verb_rewrites_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_pair(tmp.path());
    let out = kgres(&["--quiet", "--out", tmp.path().to_str().unwrap(), "run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("small-pair");
    let out = kgres(&["fit", dir.to_str().unwrap(), "--window", "10,18"]);
    assert!(out.status.code().is_some_and(|c| c <= 1), "{}", stderr(&out));
    let report: Report = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.fit_window, [10.0, 18.0]);
    assert!(!report.fits.is_empty());
    assert!(report.checks.iter().any(|c| c.name == "condition.worst_ratio"), "condition check dropped by refit");

    let out = kgres(&["fit", dir.to_str().unwrap(), "--window", "1,18"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let base = builtin("coupled-pair").unwrap().to_toml();

    let bad_mass = tmp.path().join("mass.toml");
    std::fs::write(&bad_mass, base.replace("masses = [\"1\", \"3\"]", "masses = [\"-1\", \"3\"]")).unwrap();
    let out = kgres(&["run", bad_mass.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("masses[0]"), "{}", stderr(&out));

    let bad_points = tmp.path().join("points.toml");
    std::fs::write(&bad_points, base.replace("points = 16384", "points = 1000")).unwrap();
    let out = kgres(&["run", bad_points.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grid.points"), "{}", stderr(&out));

    let unknown = tmp.path().join("unknown.toml");
    std::fs::write(&unknown, format!("{base}\n[extra]\nx = 1\n")).unwrap();
    assert_eq!(kgres(&["run", unknown.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(kgres(&["run", "no-such-scenario"]).status.code(), Some(2));
}

#[test]
fn dissipative_condition_passes() {
    let out = kgres(&["check-condition", "dissipative-resonant"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    let c = v["c_tilde"].as_f64().unwrap();
    assert!((c - 3.0).abs() < 1e-6, "C~ = {c}");

    // equal weights leave a sign-indefinite cross term in the coupled pair
    let out = kgres(&["check-condition", "coupled-pair", "--diag", "1,1"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["worst_ratio"].as_f64().unwrap() > 1e-3);
}

#[test]
fn derivative_pair_stays_free_sized() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = builtin("derivative-pair").unwrap();
    c.grid.half_length = 150.0;
    c.grid.points = 4096;
    c.time.t_final = 100.0;
    c.time.snapshots = vec![];
    c.fits.window = Some([20.0, 100.0]);
    let path = tmp.path().join("deriv.toml");
    std::fs::write(&path, c.to_toml()).unwrap();
    let out = kgres(&["--quiet", "--out", tmp.path().to_str().unwrap(), "run", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Report =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("derivative-pair/report.json")).unwrap()).unwrap();
    let spread: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with("sqrt_t_spread")).collect();
    assert_eq!(spread.len(), 2);
    assert!(spread.iter().all(|c| c.pass && c.value >= 1.0));
}
