//! Experiment configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{sample_quadratics, EssentialOptions, FitKind, Prediction, RateFit};
use crate::dynamics::{Dynamics, Metric, ModelName, Rescaling};
use crate::error::Result;
use crate::integrate::{Record, StepPolicy, StopRule, TrajectoryMeta};
use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Quadratic,
    QuadraticWitness,
    Quartic,
    PowerHinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Hessian eigenvalues of a quadratic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_c: Option<f64>,
    #[serde(rename = "radius_R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl ObjectiveConfig {
    pub fn build(&self) -> Result<Objective> {
        use crate::error::invalid;
        let f = match self.kind {
            ObjectiveName::Quadratic => {
                let eigs = self
                    .eigs
                    .clone()
                    .ok_or_else(|| invalid("objective.eigs", "required for a quadratic"))?;
                if let Some(d) = self.dim {
                    if d != eigs.len() {
                        return Err(invalid("objective.dim", "does not match the number of eigs"));
                    }
                }
                let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Objective::quadratic(eigs, self.mu.unwrap_or(lo), self.ell.unwrap_or(hi))?
            }
            ObjectiveName::QuadraticWitness => {
                let ell = self
                    .ell
                    .ok_or_else(|| invalid("objective.ell", "required for the witness"))?;
                Objective::quadratic_witness(self.dim.unwrap_or(1), self.mu.unwrap_or(0.0), ell)?
            }
            ObjectiveName::Quartic => Objective::quartic(self.dim.unwrap_or(1))?,
            ObjectiveName::PowerHinge => {
                let c = self
                    .power_c
                    .ok_or_else(|| invalid("objective.power_c", "required for the power hinge"))?;
                Objective::power_hinge(c, self.ell.unwrap_or(1.0))?
            }
        };
        match self.radius {
            Some(r) => f.with_radius(r),
            None => Ok(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    #[serde(default)]
    pub rescaling: Rescaling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_b: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub metric: Metric,
    pub kind: FitKind,
    #[serde(default = "half")]
    pub window: f64,
}

fn half() -> f64 {
    0.5
}

/// Sampled quadratics for `essential-check`; `dim`, `mu`, `ell` default to the objective's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "fifty")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default = "yes")]
    pub witness: bool,
    /// Starting points; defaults to the config's `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0s: Option<Vec<Vec<f64>>>,
}

fn fifty() -> usize {
    50
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssentialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremConfig {
    /// Rescaling whose `α(t_k)/k` is measured; defaults to the model's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Rescaling>,
    /// Defaults to the method's domain radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub objective: ObjectiveConfig,
    pub model: ModelConfig,
    #[serde(default = "rk4")]
    pub method: String,
    #[serde(default = "default_policy")]
    pub policy: StepPolicy,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default = "gap_only")]
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub essential: Option<EssentialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremConfig>,
    /// Dotted field path to the values it takes; every combination is run.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<Value>>,
}

fn rk4() -> String {
    "rk4".into()
}

fn default_policy() -> StepPolicy {
    StepPolicy::capped(0.9)
}

fn gap_only() -> Vec<Metric> {
    vec![Metric::Gap]
}

/// A config that could not be read; `path` names the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "at `{}`: {}", self.path, self.message)
        }
    }
}

fn parse_value<T: serde::de::DeserializeOwned>(v: Value) -> std::result::Result<T, ConfigError> {
    serde_path_to_error::deserialize(v).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses a config document and expands its sweep, in lexicographic order of
/// the swept paths with the last path varying fastest.
pub fn parse(text: &str) -> std::result::Result<Vec<ExperimentConfig>, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let root: Value = serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let base: ExperimentConfig = parse_value(root.clone())?;
    if base.sweep.is_empty() {
        return Ok(vec![base]);
    }
    let mut root = root;
    if let Value::Object(m) = &mut root {
        m.remove("sweep");
    }
    let axes: Vec<(&String, &Vec<Value>)> = base.sweep.iter().collect();
    for (path, values) in &axes {
        if values.is_empty() {
            return Err(ConfigError {
                path: format!("sweep.{path}"),
                message: "needs at least one value".into(),
            });
        }
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let mut doc = root.clone();
        for (a, (path, values)) in axes.iter().enumerate() {
            set_path(&mut doc, path, values[idx[a]].clone()).map_err(|message| ConfigError {
                path: format!("sweep.{path}"),
                message,
            })?;
        }
        out.push(parse_value(doc)?);
        let mut a = axes.len();
        loop {
            if a == 0 {
                return Ok(out);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].1.len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

pub fn load(path: &Path) -> std::result::Result<Vec<ExperimentConfig>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse(&text)
}

fn set_path(doc: &mut Value, path: &str, v: Value) -> std::result::Result<(), String> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let map = match cur {
            Value::Object(m) => m,
            _ => return Err(format!("`{}` is not an object", parts[..i].join("."))),
        };
        if i + 1 == parts.len() {
            map.insert(p.to_string(), v);
            return Ok(());
        }
        cur = map
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err("empty path".into())
}

/// Appends `-{index}` to the file stem when a sweep produces several runs.
pub fn indexed(path: &Path, index: usize, total: usize) -> PathBuf {
    if total <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{index}.{ext}"),
        None => format!("{stem}-{index}"),
    };
    path.with_file_name(name)
}

impl ExperimentConfig {
    pub fn dynamics(&self) -> Result<Dynamics> {
        let f = self.objective.build()?;
        let model = self.model.name.build(self.model.shift_b)?;
        Dynamics::new(model, f, self.model.rescaling.clone())
    }

    /// Configured `x₀`, or the point `(1, …, 1)/√d`.
    pub fn start(&self, dim: usize) -> Vec<f64> {
        self.x0
            .clone()
            .unwrap_or_else(|| vec![1.0 / (dim as f64).sqrt(); dim])
    }

    pub fn family(&self, f: &Objective) -> Result<Vec<Objective>> {
        match &self.family {
            None => Ok(vec![f.clone()]),
            Some(fam) => sample_quadratics(
                fam.count,
                fam.dim.unwrap_or(f.dim()),
                fam.mu.unwrap_or(f.mu()),
                fam.ell.unwrap_or(f.ell()),
                fam.witness,
                self.seed,
            ),
        }
    }

    pub fn essential_options(&self) -> EssentialOptions {
        let mut o = EssentialOptions::default();
        if let Some(e) = &self.essential {
            o.horizon = e.horizon.unwrap_or(o.horizon);
            o.tail_frac = e.tail_frac.unwrap_or(o.tail_frac);
            o.tol = e.tol.unwrap_or(o.tol);
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub metric: Metric,
    pub kind: FitKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Written by `simulate`, one per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub meta: TrajectoryMeta,
    pub steps: usize,
    pub final_record: Record,
    pub fits: Vec<FitReport>,
}
