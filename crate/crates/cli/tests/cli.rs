use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinbath"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn evolve_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&[
            "evolve",
            "--config",
            path(&scenario("cascade_v2.toml")),
            "--out",
            path(dir),
            "--deterministic",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in [
        "W.csv",
        "kappa.csv",
        "trajectory.csv",
        "observables.csv",
        "temperature.csv",
        "release.csv",
        "dicke_release.csv",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn report_echoes_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "evolve",
        "--config",
        path(&scenario("two_level.toml")),
        "--out",
        path(tmp.path()),
    ]);
    assert!(out.status.success());
    let r = report(tmp.path());
    assert_eq!(r["status"], "ok");
    assert_eq!(r["config"]["seed"], 0);
    assert_eq!(r["config"]["observables"]["energy_scale"], 1.0);
    assert_eq!(r["config"]["backend"]["n_plus_abs"], 1.0);
    assert_eq!(r["tolerances"]["positivity"], 1e-10);
}

#[test]
fn seed_and_cutoff_overrides_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "evolve",
        "--config",
        path(&scenario("cascade_v2.toml")),
        "--out",
        path(tmp.path()),
        "--seed",
        "42",
        "--jmax",
        "3/2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["seed"], 42);
    assert_eq!(r["config"]["backend"]["j_max"], "3/2");
}

#[test]
fn batch_writes_one_directory_per_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "evolve",
        "--config",
        path(&scenario("two_level.toml")),
        "--config",
        path(&scenario("identity_kappa.toml")),
        "--out",
        path(tmp.path()),
        "--jobs",
        "2",
    ]);
    assert!(out.status.success());
    for stem in ["two_level", "identity_kappa"] {
        assert_eq!(report(&tmp.path().join(stem))["status"], "ok");
    }
}

#[test]
fn invalid_scenario_fails_with_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(
        &cfg,
        "name = \"bad\"\nbasis = [\"1\", \"2\"]\n\n[backend]\nkind = \"kappa\"\nentries = [[0.0, -1.0], [1.0, 0.0]]\n\n\
         [evolution]\ng = 0.1\nsteps = 3\ninitial = { label = \"2\" }\n",
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = run(&["evolve", "--config", path(&cfg), "--out", path(&dir)]);
    assert!(!out.status.success());
    let r = report(&dir);
    assert_eq!(r["status"], "error");
    assert!(r["error"].as_str().unwrap().contains("non-negative"));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("typo.toml");
    fs::write(&cfg, "name = \"typo\"\nbasis = [\"1\"]\nbsais = 3\n").unwrap();
    let out = run(&["steady-state", "--config", path(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bsais"));
}

#[test]
fn two_level_prints_the_closed_form() {
    let out = run(&["two-level", "--lambda1", "2", "--lambda2", "2", "--alpha", "1"]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert_eq!(v, 0.5);

    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("sweep.csv");
    let out = run(&["two-level", "--sweep", "5", "--alpha", "2", "--out", path(&csv)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 26);
}

#[test]
fn steady_state_reports_the_kernel() {
    let out = run(&["steady-state", "--config", path(&scenario("two_level.toml"))]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kernel_dim"], 1);
    let p = &v["populations"][0];
    assert!((p[0].as_f64().unwrap() + p[1].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn compare_of_a_curve_with_itself_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "evolve",
        "--config",
        path(&scenario("cascade_v2.toml")),
        "--out",
        path(tmp.path()),
    ]);
    assert!(out.status.success());
    let curve = tmp.path().join("dicke_release.csv");
    let out = run(&["compare", path(&curve), path(&curve)]);
    assert!(out.status.success());
    let d: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert_eq!(d, 0.0);

    let out = run(&["compare", path(&tmp.path().join("release.csv")), path(&curve)]);
    assert!(out.status.success());
    let d: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((d - report(tmp.path())["dicke_distance"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn spectral_temperature_writes_a_series() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "spectral-temperature",
        "--config",
        path(&scenario("cascade_v2.toml")),
        "--out",
        path(tmp.path()),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("negative to positive: true"));
    let text = fs::read_to_string(tmp.path().join("temperature.csv")).unwrap();
    assert!(text.starts_with("step,beta,T"));
}

#[test]
fn sample_emits_a_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(
        &cfg,
        "name = \"small\"\nseed = 3\n\n[fit]\nvertices = [2]\nlabels = 4\nbath_samples = 50\nmodel_terms = 6\n",
    )
    .unwrap();
    let out = run(&[
        "sample",
        "--config",
        path(&cfg),
        "--samples",
        "200",
        "--vertices",
        "2",
        "--out",
        path(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("histogram.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn fit_reports_each_vertex_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(
        &cfg,
        "name = \"small\"\nseed = 5\n\n[fit]\nvertices = [2, 3]\nlabels = 4\nbath_samples = 50\nmodel_terms = 6\n\
         cost_samples = 100\nrestarts = 2\n",
    )
    .unwrap();
    let out = run(&[
        "fit",
        "--config",
        path(&cfg),
        "--out",
        path(tmp.path()),
        "--deterministic",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("V = 2") && stdout.contains("V = 3"));
    let r = report(tmp.path());
    assert_eq!(r["fit"]["entries"].as_array().unwrap().len(), 2);
    assert!(tmp.path().join("histogram.csv").exists());
}
