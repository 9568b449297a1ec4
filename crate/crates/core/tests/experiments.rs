use std::fs;
use std::path::Path;

use eeqt_core::experiments::{run_config, RunConfig};
use eeqt_core::par::with_threads;
use eeqt_core::Execution;

fn config(text: &str) -> RunConfig {
    RunConfig::from_json(text).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn spin_ifs_writes_cloud_dimension_and_image() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"schema_version":1,"preset":"spin_ifs","seed":9,"params":{"a":0.73,"points":20000,"burn_in":100,"resolution":128}}"#);
    let report = run_config(&cfg, None, Some(dir.path()), Execution::default()).unwrap();
    for f in ["cloud.csv", "dimension.txt", "fig1.pgm", "scales.csv", "manifest.json"] {
        assert!(report.files.iter().any(|g| g == f), "{f} missing from report");
        assert!(dir.path().join(f).exists(), "{f} not written");
    }
    let cloud = String::from_utf8(read(dir.path(), "cloud.csv")).unwrap();
    assert_eq!(cloud.lines().next(), Some("x,y,z"));
    assert_eq!(cloud.lines().count(), 20_001);
    assert!(read(dir.path(), "fig1.pgm").starts_with(b"P5\n128 128\n255\n"));
    let dim: f64 = String::from_utf8(read(dir.path(), "dimension.txt")).unwrap().trim().parse().unwrap();
    assert!(dim > 0.3 && dim < 2.0, "{dim}");

    let manifest: serde_json::Value = serde_json::from_slice(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["preset"], "spin_ifs");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["params"]["a"], 0.73);
    assert!(manifest["anchor"].as_str().is_some_and(|s| !s.is_empty()));
}

#[test]
fn same_seed_gives_identical_files_at_any_thread_count() {
    let cfg = config(
        r#"{"schema_version":1,"preset":"master_vs_pdp","seed":5,"params":{"t_final":1.0,"dt":0.01,"record_every":10,"trajectories":300}}"#,
    );
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    with_threads(Some(1), || run_config(&cfg, None, Some(a.path()), Execution::default())).unwrap();
    with_threads(Some(3), || run_config(&cfg, None, Some(b.path()), Execution::default())).unwrap();
    run_config(&cfg, None, Some(c.path()), Execution::Sequential).unwrap();
    for f in ["master.csv", "pdp.csv", "comparison.csv", "first_events.csv", "manifest.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
        assert_eq!(read(a.path(), f), read(c.path(), f), "{f}");
    }
}

#[test]
fn seed_override_changes_trajectories_only() {
    let cfg = config(r#"{"schema_version":1,"preset":"zeno","seed":1,"params":{"kappas":[5.0],"t_max":5.0,"trajectories":50,"master_t_max":5.0,"master_dt":0.01}}"#);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_config(&cfg, None, Some(a.path()), Execution::default()).unwrap();
    run_config(&cfg, Some(2), Some(b.path()), Execution::default()).unwrap();
    assert_ne!(read(a.path(), "zeno.csv"), read(b.path(), "zeno.csv"));
}

#[test]
fn small_runs_of_every_preset() {
    let runs = [
        (r#""detector_cdf","params":{"trajectories":500,"steps":200}"#, "cdf.csv"),
        (r#""born_limit","params":{"levels":2}"#, "born.csv"),
        (r#""dirac","params":{"nx":16,"nt":8,"samples":50,"dtau":0.05}"#, "norm.csv"),
        (r#""fig1","params":{"points":5000,"resolution":64}"#, "fig1.pgm"),
    ];
    for (body, file) in runs {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(&format!(r#"{{"schema_version":1,"preset":{body}}}"#));
        run_config(&cfg, None, Some(dir.path()), Execution::default()).unwrap_or_else(|e| panic!("{body}: {e}"));
        assert!(dir.path().join(file).exists(), "{file}");
        assert!(dir.path().join("manifest.json").exists());
    }
}

#[test]
fn custom_model_matches_master_equation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{
        "schema_version": 1, "preset": "custom", "seed": 3,
        "params": {
            "labels": [
                {"dim": 2, "hamiltonian": [[[0,0],[0.5,0]],[[0.5,0],[0,0]]]},
                {"dim": 2}
            ],
            "couplings": [{"to": 1, "from": 0, "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]}],
            "initial": {"label": 0, "psi": [[1,0],[0,0]]},
            "t_final": 2.0, "dt": 0.01, "record_every": 20, "trajectories": 4000
        }
    }"#,
    );
    let report = run_config(&cfg, None, Some(dir.path()), Execution::default()).unwrap();
    let dev = report.summary["max_abs_deviation"].as_f64().unwrap();
    assert!(dev < 0.03, "{dev}");
}

#[test]
fn validation_failures_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    for text in [
        r#"{"schema_version":1,"preset":"nope"}"#,
        r#"{"schema_version":1,"preset":"spin_ifs","params":{"a":1.5}}"#,
        r#"{"schema_version":1,"preset":"master_vs_pdp","params":{"dt":-1}}"#,
        r#"{"schema_version":1,"preset":"custom","params":{"labels":[{"dim":2}],"initial":{"label":3,"psi":[[1,0],[0,0]]},"t_final":1,"dt":0.1}}"#,
    ] {
        let err = run_config(&config(text), None, Some(&out), Execution::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
        assert!(!out.exists(), "{text}");
    }
}

#[test]
fn positivity_guard_maps_to_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = config(
        r#"{"schema_version":1,"preset":"custom","params":{
            "labels":[{"dim":1},{"dim":1}],
            "couplings":[{"to":1,"from":0,"matrix":[[[10,0]]]}],
            "initial":{"label":0,"psi":[[1,0]]},
            "t_final":1.0,"dt":0.5,"mode":"master"}}"#,
    );
    let err = run_config(&cfg, None, Some(&out), Execution::default()).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(!out.exists());
}
