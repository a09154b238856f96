//! Run configurations: a JSON file overlaid with command-line flags, then
//! validated against a closed schema.

use std::path::PathBuf;

use hyperbox::{ModelDescriptor, ProcessDescriptor};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Exponents tabulated when `rv1d` gets no `a`.
pub const DEFAULT_A_VALUES: [f64; 5] = [0.0, 0.1, 0.4, 0.8, 1.0];
pub const LATTICE_RADIUS: i64 = 2;
const MAX_GRID_POINTS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Integrable,
    Rv1d,
    Rv2d,
}

/// `"min:max:step"` or `{"min": .., "max": .., "step": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZGrid {
    Spec(String),
    Range { min: f64, max: f64, step: f64 },
}

impl ZGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let (min, max, step) = match self {
            ZGrid::Range { min, max, step } => (*min, *max, *step),
            ZGrid::Spec(s) => {
                let parts: Vec<&str> = s.split(':').collect();
                let num = |p: &str| {
                    p.trim().parse::<f64>().map_err(|_| CliError::Config(format!("zgrid `{s}`: `{p}` is not a number")))
                };
                match parts.as_slice() {
                    [a, b, c] => (num(a)?, num(b)?, num(c)?),
                    _ => return Err(CliError::Config(format!("zgrid `{s}` is not min:max:step"))),
                }
            }
        };
        if !(min.is_finite() && max.is_finite() && step > 0.0 && step.is_finite() && max >= min) {
            return Err(CliError::Config(format!("zgrid needs finite min <= max and step > 0, got {min}:{max}:{step}")));
        }
        let k = ((max - min) / step * (1.0 + 1e-12)).floor();
        if k + 1.0 > MAX_GRID_POINTS {
            return Err(CliError::Config(format!("zgrid has {} points", k + 1.0)));
        }
        Ok((0..=k as i64).map(|i| round9(min + i as f64 * step)).collect())
    }
}

/// Rounds to 1e-9 so that grid values print as their intended decimals.
pub fn round9(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<OneOrMany>,
    /// Model whose `G±` define the `rv2d` kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zgrid: Option<ZGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zgrid_lattice: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub process: ProcessDescriptor,
    pub seed: u64,
    pub replicas: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    /// Shifts along the first axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zgrid: Option<ZGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<f64>>,
    /// Number of coarse-grained paths to write.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    /// Variance reference for paths; defaults to this run's estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_var: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub cov_curve: PathBuf,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    /// Config hash the run must have been produced with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Reads the optional config file and overlays `flags` on it.
pub fn merge(file: Option<&PathBuf>, flags: Map<String, Value>) -> Result<Value, CliError> {
    let mut base = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    let obj = base
        .as_object_mut()
        .ok_or_else(|| CliError::Config("config file must hold a JSON object".into()))?;
    obj.extend(flags);
    Ok(base)
}

pub fn parse<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
}

/// Parses a flag holding inline JSON.
pub fn json_flag(name: &str, text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("--{name}: {e}")))
}
