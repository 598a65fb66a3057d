//! Flat JSON experiment configuration.

use std::path::PathBuf;

use meanfield_core::continuation::linspace;
use meanfield_core::{CatalystConfig, ModelSpec, Placement, Schedule};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "task",
    "model",
    "h1",
    "h2",
    "gamma1",
    "gamma2",
    "xi11",
    "xi22",
    "xi12",
    "placement",
    "s_min",
    "s_max",
    "s_steps",
    "axis2",
    "axis2_min",
    "axis2_max",
    "axis2_steps",
    "axis2_values",
    "jump_threshold",
    "xi_tol",
    "ed_n",
    "output",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Scan,
    Gap,
    MinGap,
    OptimizeXi,
    EdCheck,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Scan => "scan",
            Task::Gap => "gap",
            Task::MinGap => "min-gap",
            Task::OptimizeXi => "optimize-xi",
            Task::EdCheck => "ed-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dense,
    Sparse,
}

/// Second scan axis. `Xi` scales the catalyst placement; the gamma axes fix
/// one cluster's schedule value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis2 {
    Xi,
    Gamma1,
    Gamma2,
}

/// A cluster schedule: the string "s" or a fixed number in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Fixed(f64),
    Named(IdentityTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdentityTag {
    #[serde(rename = "s")]
    S,
}

impl GammaSetting {
    fn schedule(self) -> Schedule {
        match self {
            GammaSetting::Fixed(g) => Schedule::FixedValue(g),
            GammaSetting::Named(IdentityTag::S) => Schedule::Identity,
        }
    }
}

fn default_gamma() -> GammaSetting {
    GammaSetting::Named(IdentityTag::S)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default = "default_h1")]
    pub h1: f64,
    #[serde(default = "default_h2")]
    pub h2: f64,
    #[serde(default = "default_gamma")]
    pub gamma1: GammaSetting,
    #[serde(default = "default_gamma")]
    pub gamma2: GammaSetting,
    #[serde(default)]
    pub xi11: f64,
    #[serde(default)]
    pub xi22: f64,
    #[serde(default)]
    pub xi12: f64,
    #[serde(default)]
    pub placement: Option<Placement>,
    #[serde(default)]
    pub s_min: f64,
    #[serde(default = "one")]
    pub s_max: f64,
    #[serde(default = "default_s_steps")]
    pub s_steps: usize,
    #[serde(default)]
    pub axis2: Option<Axis2>,
    #[serde(default)]
    pub axis2_min: Option<f64>,
    #[serde(default)]
    pub axis2_max: Option<f64>,
    #[serde(default)]
    pub axis2_steps: Option<usize>,
    #[serde(default)]
    pub axis2_values: Option<Vec<f64>>,
    #[serde(default = "default_jump")]
    pub jump_threshold: f64,
    #[serde(default = "default_xi_tol")]
    pub xi_tol: f64,
    #[serde(default)]
    pub ed_n: Option<usize>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_model() -> ModelKind {
    ModelKind::Dense
}
fn default_h1() -> f64 {
    1.0
}
fn default_h2() -> f64 {
    -0.49
}
fn one() -> f64 {
    1.0
}
fn default_s_steps() -> usize {
    201
}
fn default_jump() -> f64 {
    0.5
}
fn default_xi_tol() -> f64 {
    0.05
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Map::new())).expect("all keys have defaults")
    }
}

impl ExperimentConfig {
    /// Parses a flat JSON object. Unknown keys are collected and reported
    /// together.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        let unknown: Vec<&str> = map.keys().map(String::as_str).filter(|k| !KNOWN_KEYS.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown config keys: {}", unknown.join(", "))));
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(format!("bad config value: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.s_steps < 1 {
            return bad("s_steps must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.s_min) || !(0.0..=1.0).contains(&self.s_max) || self.s_min > self.s_max {
            return bad(format!("need 0 <= s_min <= s_max <= 1, got [{}, {}]", self.s_min, self.s_max));
        }
        for (name, v) in [("h1", self.h1), ("h2", self.h2), ("xi11", self.xi11), ("xi22", self.xi22), ("xi12", self.xi12)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if let GammaSetting::Fixed(v) = g {
                if !(0.0..=1.0).contains(&v) {
                    return bad(format!("{name} must be \"s\" or a number in [0, 1], got {v}"));
                }
            }
        }
        if !(self.jump_threshold > 0.0) || !(self.xi_tol > 0.0) {
            return bad("jump_threshold and xi_tol must be positive".into());
        }
        match self.axis2 {
            None => {
                if self.axis2_min.is_some() || self.axis2_max.is_some() || self.axis2_steps.is_some() || self.axis2_values.is_some() {
                    return bad("axis2 bounds given without axis2".into());
                }
            }
            Some(axis) => {
                if self.axis2_values.is_some() {
                    if self.axis2_min.is_some() || self.axis2_max.is_some() || self.axis2_steps.is_some() {
                        return bad("give either axis2_values or axis2_min/max/steps, not both".into());
                    }
                } else {
                    let (Some(lo), Some(hi)) = (self.axis2_min, self.axis2_max) else {
                        return bad("axis2 needs axis2_min and axis2_max (or axis2_values)".into());
                    };
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return bad(format!("axis2 bounds must be ordered, got [{lo}, {hi}]"));
                    }
                    if self.axis2_steps == Some(0) {
                        return bad("axis2_steps must be at least 1".into());
                    }
                }
                let values = self.axis2_grid();
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return bad("axis2 values must be finite and non-empty".into());
                }
                if axis != Axis2::Xi && values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad("gamma axis values must lie in [0, 1]".into());
                }
                if axis == Axis2::Xi && self.placement.is_none() {
                    return bad("axis2 = xi needs a placement".into());
                }
            }
        }
        if self.axis2.is_none() && self.placement.is_some() {
            return bad("placement is only used with axis2 = xi".into());
        }
        Ok(())
    }

    pub fn s_grid(&self) -> Vec<f64> {
        linspace(self.s_min, self.s_max, self.s_steps)
    }

    /// Second-axis values; a single `NaN`-free placeholder column when no
    /// second axis is configured.
    pub fn axis2_grid(&self) -> Vec<f64> {
        match (&self.axis2_values, self.axis2_min, self.axis2_max) {
            (Some(v), _, _) => v.clone(),
            (None, Some(lo), Some(hi)) => linspace(lo, hi, self.axis2_steps.unwrap_or(101)),
            _ => vec![],
        }
    }

    /// Columns of the scan: (axis2 value, model).
    pub fn columns(&self) -> Vec<(Option<f64>, ModelSpec)> {
        match self.axis2 {
            None => vec![(None, self.spec_at(None))],
            Some(_) => self.axis2_grid().into_iter().map(|v| (Some(v), self.spec_at(Some(v)))).collect(),
        }
    }

    /// Model at a second-axis value.
    pub fn spec_at(&self, v: Option<f64>) -> ModelSpec {
        let base = CatalystConfig::new(self.xi11, self.xi22, self.xi12);
        let (mut g1, mut g2) = (self.gamma1.schedule(), self.gamma2.schedule());
        let catalyst = match (self.axis2, v) {
            (Some(Axis2::Xi), Some(xi)) => {
                let p = self.placement.expect("validated").catalyst(xi);
                CatalystConfig::new(base.xi11 + p.xi11, base.xi22 + p.xi22, base.xi12 + p.xi12)
            }
            (Some(Axis2::Gamma1), Some(g)) => {
                g1 = Schedule::FixedValue(g);
                base
            }
            (Some(Axis2::Gamma2), Some(g)) => {
                g2 = Schedule::FixedValue(g);
                base
            }
            _ => base,
        };
        let spec = match self.model {
            ModelKind::Dense => ModelSpec::dense(catalyst),
            ModelKind::Sparse => ModelSpec::sparse(catalyst),
        };
        spec.with_fields(self.h1, self.h2).with_schedule(g1, g2)
    }

    /// The λ = −ξ/2 convention applies when ξ sits on the intercluster term only.
    pub fn is_intercluster_xi(&self) -> bool {
        self.axis2 == Some(Axis2::Xi) && self.placement == Some(Placement::Intercluster)
    }
}
