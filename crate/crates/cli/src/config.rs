//! Scenario files: one JSON object per run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that replaces the configured output directory.
pub const OUT_ENV: &str = "GEOFLOW_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Csf,
    McfGraph,
    Heat,
    Ricci2d,
    Fisher,
    Mse,
    Delta,
}

pub const KINDS: [&str; 7] = ["csf", "mcf_graph", "heat", "ricci2d", "fisher", "mse", "delta"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    /// Multiple of the squared node spacing; `None` uses the largest stable
    /// value for the kind.
    #[serde(default)]
    pub cfl_factor: Option<f64>,
    pub t_end: Option<f64>,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

fn default_sample_every() -> usize {
    10
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            cfl_factor: None,
            t_end: None,
            sample_every: default_sample_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub spec_version: u32,
    pub kind: Kind,
    pub initial: InitialData,
    /// Nodes on the curve, grid points per axis, or cells per side.
    pub resolution: usize,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default)]
    pub diagnostics: Vec<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("geoflow-out")
}

/// Resolution bounds per kind; `Fisher` and `Delta` ignore the value.
fn resolution_bounds(kind: Kind) -> (usize, usize) {
    match kind {
        Kind::Csf => (8, 8192),
        Kind::McfGraph | Kind::Heat => (16, 4096),
        Kind::Ricci2d => (16, 512),
        Kind::Mse => (16, 512),
        Kind::Fisher | Kind::Delta => (0, usize::MAX),
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("scenario is not valid JSON: {e}")))?;
        if let Some(kind) = value.get("kind") {
            serde_json::from_value::<Kind>(kind.clone()).map_err(|_| {
                CliError::Config(format!(
                    "kind: unknown scenario kind {kind}; expected one of {}",
                    KINDS.join(", ")
                ))
            })?;
        }
        let cfg: ScenarioConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid scenario: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.spec_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "spec_version: expected {SCHEMA_VERSION}, got {}",
                self.spec_version
            )));
        }
        let (lo, hi) = resolution_bounds(self.kind);
        if !(lo..=hi).contains(&self.resolution) {
            return Err(CliError::Config(format!(
                "resolution: {} is outside {lo}..={hi} for this kind",
                self.resolution
            )));
        }
        if let Some(t) = self.step.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("step.t_end: must be positive, got {t}")));
            }
        }
        if let Some(c) = self.step.cfl_factor {
            if !(c > 0.0 && c <= 1.0) {
                return Err(CliError::Config(format!("step.cfl_factor: must be in (0, 1], got {c}")));
            }
        }
        if self.step.sample_every == 0 {
            return Err(CliError::Config("step.sample_every: must be at least 1".into()));
        }
        let needs_t_end = matches!(self.kind, Kind::McfGraph | Kind::Heat | Kind::Ricci2d);
        if needs_t_end && self.step.t_end.is_none() {
            return Err(CliError::Config("step.t_end: required for this kind".into()));
        }
        Ok(())
    }

    /// `GEOFLOW_OUT` when set and non-empty, else `output_dir`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        output_dir_override().unwrap_or_else(|| self.output_dir.clone())
    }
}

pub fn output_dir_override() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

impl InitialData {
    pub fn num(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| CliError::Config(format!("initial.params.{key}: expected a number, got {v}"))),
        }
    }

    pub fn nums(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_f64().ok_or_else(|| {
                        CliError::Config(format!("initial.params.{key}: expected numbers, got {v}"))
                    })
                })
                .collect(),
            Some(v) => Err(CliError::Config(format!("initial.params.{key}: expected an array, got {v}"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(CliError::Config(format!("initial.params.{key}: expected a string, got {v}"))),
        }
    }
}
