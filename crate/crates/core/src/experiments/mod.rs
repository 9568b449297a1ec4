//! Configuration-driven experiment runs.
//!
//! A run is described by a JSON document:
//!
//! ```json
//! { "schema_version": 1, "preset": "zeno", "seed": 7, "params": { "trajectories": 500 } }
//! ```
//!
//! Unknown keys are rejected at every level. Missing parameters take the
//! preset defaults, and the resolved parameters are echoed into
//! `manifest.json` next to the outputs.

mod custom;
mod presets;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::par::Execution;

pub use custom::{CustomParams, LabelSpec, CouplingSpec, InitialSpec, Matrix};
pub use presets::{BornLimitParams, DetectorCdfParams, DiracParams, Fig1Params, MasterVsPdpParams, SpinIfsParams, ZenoParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub preset: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// A preset and what it reproduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub anchor: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo { name: "master_vs_pdp", anchor: "jump-process average reproduces the linear master equation" },
    PresetInfo { name: "detector_cdf", anchor: "detection probability of a particle passing a Gaussian detector" },
    PresetInfo { name: "born_limit", anchor: "point-detector limit: event rate kappa |psi(a)|^2" },
    PresetInfo { name: "zeno", anchor: "strong coupling freezes the Hamiltonian evolution (Zeno effect)" },
    PresetInfo { name: "dirac", anchor: "proper-time Dirac detector and the relativistic event algorithm" },
    PresetInfo { name: "spin_ifs", anchor: "fractal dimension of the four-polarizer spin attractor" },
    PresetInfo { name: "fig1", anchor: "spin attractor viewed from the north pole, a = 0.73" },
    PresetInfo { name: "custom", anchor: "user-supplied hybrid model" },
];

pub fn preset_info(name: &str) -> Option<&'static PresetInfo> {
    PRESETS.iter().find(|p| p.name == name)
}

/// A validated run: preset parameters with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    MasterVsPdp(MasterVsPdpParams),
    DetectorCdf(DetectorCdfParams),
    BornLimit(BornLimitParams),
    Zeno(ZenoParams),
    Dirac(DiracParams),
    SpinIfs(SpinIfsParams),
    Fig1(Fig1Params),
    Custom(CustomParams),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for bad input, 3 when a numerical guard fired, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Model(e) if e.is_numerical_guard() => 3,
            RunError::Model(_) => 2,
            RunError::Io(_) => 1,
        }
    }
}

fn params<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, RunError> {
    serde_json::from_value(v.clone()).map_err(|e| RunError::Validation(format!("params: {e}")))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Validation(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Experiment, RunError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(RunError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !self.params.is_object() {
            return Err(RunError::Validation("params must be an object".into()));
        }
        let p = &self.params;
        let exp = match self.preset.as_str() {
            "master_vs_pdp" => Experiment::MasterVsPdp(params(p)?),
            "detector_cdf" => Experiment::DetectorCdf(params(p)?),
            "born_limit" => Experiment::BornLimit(params(p)?),
            "zeno" => Experiment::Zeno(params(p)?),
            "dirac" => Experiment::Dirac(params(p)?),
            "spin_ifs" => Experiment::SpinIfs(params(p)?),
            "fig1" => Experiment::Fig1(params(p)?),
            "custom" => Experiment::Custom(params(p)?),
            other => return Err(RunError::Validation(format!("unknown preset '{other}'"))),
        };
        exp.validate()?;
        Ok(exp)
    }
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::MasterVsPdp(_) => "master_vs_pdp",
            Experiment::DetectorCdf(_) => "detector_cdf",
            Experiment::BornLimit(_) => "born_limit",
            Experiment::Zeno(_) => "zeno",
            Experiment::Dirac(_) => "dirac",
            Experiment::SpinIfs(_) => "spin_ifs",
            Experiment::Fig1(_) => "fig1",
            Experiment::Custom(_) => "custom",
        }
    }

    fn params_json(&self) -> Value {
        let v = match self {
            Experiment::MasterVsPdp(p) => serde_json::to_value(p),
            Experiment::DetectorCdf(p) => serde_json::to_value(p),
            Experiment::BornLimit(p) => serde_json::to_value(p),
            Experiment::Zeno(p) => serde_json::to_value(p),
            Experiment::Dirac(p) => serde_json::to_value(p),
            Experiment::SpinIfs(p) => serde_json::to_value(p),
            Experiment::Fig1(p) => serde_json::to_value(p),
            Experiment::Custom(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialize")
    }

    /// Cheap checks that do not run any numerics.
    pub fn validate(&self) -> Result<(), RunError> {
        match self {
            Experiment::MasterVsPdp(p) => p.validate(),
            Experiment::DetectorCdf(p) => p.validate(),
            Experiment::BornLimit(p) => p.validate(),
            Experiment::Zeno(p) => p.validate(),
            Experiment::Dirac(p) => p.validate(),
            Experiment::SpinIfs(p) => p.validate(),
            Experiment::Fig1(p) => p.validate(),
            Experiment::Custom(p) => p.validate(),
        }
    }

    fn execute(&self, seed: u64, exec: Execution) -> Result<Outputs, RunError> {
        match self {
            Experiment::MasterVsPdp(p) => p.run(seed, exec),
            Experiment::DetectorCdf(p) => p.run(seed, exec),
            Experiment::BornLimit(p) => p.run(),
            Experiment::Zeno(p) => p.run(seed, exec),
            Experiment::Dirac(p) => p.run(seed, exec),
            Experiment::SpinIfs(p) => p.run(seed),
            Experiment::Fig1(p) => p.run(seed),
            Experiment::Custom(p) => p.run(seed, exec),
        }
    }
}

/// Files produced by a preset, written only once the whole run succeeded.
#[derive(Default)]
pub(crate) struct Outputs {
    files: Vec<(&'static str, Vec<u8>)>,
    summary: serde_json::Map<String, Value>,
}

impl Outputs {
    pub(crate) fn file(&mut self, name: &'static str, contents: impl Into<Vec<u8>>) {
        self.files.push((name, contents.into()));
    }

    pub(crate) fn summary(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).expect("summary serializes"));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub preset: String,
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Value,
}

/// Runs `exp` and writes its outputs plus `manifest.json` into `out`.
pub fn run_experiment(exp: &Experiment, seed: u64, out: &Path, exec: Execution) -> Result<RunReport, RunError> {
    let outputs = exp.execute(seed, exec)?;
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    for (name, bytes) in &outputs.files {
        crate::csv::write_file(&out.join(name), bytes)?;
        files.push(name.to_string());
    }
    files.push("manifest.json".into());
    let info = preset_info(exp.name()).expect("every experiment has a preset entry");
    let summary = Value::Object(outputs.summary);
    let manifest = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "preset": info.name,
        "anchor": info.anchor,
        "seed": seed,
        "params": exp.params_json(),
        "files": files,
        "summary": summary,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    crate::csv::write_file(&out.join("manifest.json"), text.as_bytes())?;
    Ok(RunReport { preset: info.name.to_string(), output_dir: out.to_path_buf(), files, summary })
}

/// Parses, validates and runs a configuration. `seed` and `out` override
/// the values in the document; the output directory defaults to `out`.
pub fn run_config(cfg: &RunConfig, seed: Option<u64>, out: Option<&Path>, exec: Execution) -> Result<RunReport, RunError> {
    let exp = cfg.resolve()?;
    let seed = seed.unwrap_or(cfg.seed);
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    run_experiment(&exp, seed, &dir, exec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset_is_a_validation_error() {
        let cfg = RunConfig::from_json(r#"{"schema_version":1,"preset":"nope"}"#).unwrap();
        let err = cfg.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"schema_version":1,"preset":"zeno","extra":1}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"schema_version":1,"preset":"zeno","params":{"kapa":[1]}}"#).unwrap();
        assert!(matches!(cfg.resolve(), Err(RunError::Validation(_))));
    }

    #[test]
    fn defaults_fill_missing_params() {
        let cfg = RunConfig::from_json(r#"{"schema_version":1,"preset":"spin_ifs","params":{"a":0.9}}"#).unwrap();
        match cfg.resolve().unwrap() {
            Experiment::SpinIfs(p) => {
                assert_eq!(p.a, 0.9);
                assert_eq!(p.points, SpinIfsParams::default().points);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version() {
        let cfg = RunConfig::from_json(r#"{"schema_version":2,"preset":"zeno"}"#).unwrap();
        assert!(matches!(cfg.resolve(), Err(RunError::Validation(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::from(Error::PositivityLost { t: 0.0, min_eigenvalue: -1.0 }).exit_code(), 3);
        assert_eq!(RunError::from(Error::InvalidParameter("x".into())).exit_code(), 2);
    }

    #[test]
    fn every_preset_has_defaults_that_validate() {
        for p in PRESETS.iter().filter(|p| p.name != "custom") {
            let cfg = RunConfig { schema_version: 1, preset: p.name.into(), seed: 0, output_dir: None, params: empty_object() };
            cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }
}
