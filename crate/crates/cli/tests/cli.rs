use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eeqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eeqt")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn presets_lists_every_preset() {
    let out = eeqt(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["master_vs_pdp", "detector_cdf", "born_limit", "zeno", "dirac", "spin_ifs", "fig1"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn spin_ifs_run_produces_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"preset":"spin_ifs","params":{"a":0.73,"points":10000,"resolution":64}}"#);
    let out_dir = dir.path().join("out");
    let out = eeqt(&["run", &cfg, "--seed", "4", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["cloud.csv", "dimension.txt", "fig1.pgm", "manifest.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let manifest = fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 4"));
}

#[test]
fn unknown_preset_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"preset":"quantum_toaster"}"#);
    let out_dir = dir.path().join("out");
    let out = eeqt(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("quantum_toaster"));
    assert!(!out_dir.exists());
}

#[test]
fn malformed_json_and_missing_file_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ not json");
    assert_eq!(eeqt(&["run", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(eeqt(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version":1,"preset":"custom","params":{
            "labels":[{"dim":1},{"dim":1}],
            "couplings":[{"to":1,"from":0,"matrix":[[[10,0]]]}],
            "initial":{"label":0,"psi":[[1,0]]},
            "t_final":1.0,"dt":0.5,"mode":"master"}}"#,
    );
    let out = eeqt(&["run", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("positivity"));
}

#[test]
fn csv_output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version":1,"preset":"master_vs_pdp","seed":11,"params":{"t_final":1.0,"dt":0.01,"record_every":10,"trajectories":400}}"#,
    );
    let runs: Vec<_> = ["1", "2", "4"]
        .iter()
        .map(|k| {
            let out_dir = dir.path().join(format!("t{k}"));
            let out = eeqt(&["run", &cfg, "--threads", k, "--out", out_dir.to_str().unwrap()]);
            assert!(out.status.success());
            out_dir
        })
        .collect();
    for f in ["master.csv", "pdp.csv", "first_events.csv"] {
        let first = fs::read(runs[0].join(f)).unwrap();
        for r in &runs[1..] {
            assert_eq!(first, fs::read(r.join(f)).unwrap(), "{f}");
        }
    }
}
