//! Run configuration read from JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use steer_core::certify::SampleBox;
use steer_core::synthesis::{CoercivityPolicy, Method, SynthesisOptions};
use steer_core::{Anchor, DVector, TimeGrid, TransferProblem};

use crate::error::CliError;
use crate::models::Model;

/// Keys every run config must carry.
pub const REQUIRED_KEYS: [&str; 6] = ["model", "t0", "T", "x0", "x1", "method"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    MinEnergy,
    Gramian,
    Fl,
}

impl MethodName {
    pub const ALL: [MethodName; 3] = [MethodName::MinEnergy, MethodName::Gramian, MethodName::Fl];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::MinEnergy => "min_energy",
            MethodName::Gramian => "gramian",
            MethodName::Fl => "fl",
        }
    }

    pub fn method(self) -> Method {
        match self {
            MethodName::MinEnergy => Method::MinEnergy,
            MethodName::Gramian => Method::GramianLike,
            MethodName::Fl => Method::BaselineFl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AnchorName {
    #[serde(rename = "t0")]
    Initial,
    #[default]
    #[serde(rename = "T")]
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    #[default]
    Warn,
    Abort,
}

/// State box for the sampled certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_time_samples")]
    pub n_t: usize,
    #[serde(default = "default_state_samples")]
    pub n_x: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    /// Scalar parameter overrides for the builtin model.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub anchor: AnchorName,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub method: MethodName,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_floor")]
    pub coercivity_floor: f64,
    #[serde(default)]
    pub coercivity_policy: PolicyName,
    /// Constant Picard seed; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Attach certificates to the run report.
    #[serde(default)]
    pub certify: bool,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<BoxConfig>,
}

fn default_grid_n() -> usize {
    401
}
fn default_tol() -> f64 {
    1e-9
}
fn default_max_iter() -> usize {
    50
}
fn default_floor() -> f64 {
    1e-6
}
fn default_output_dir() -> String {
    "out".into()
}
fn default_time_samples() -> usize {
    SampleBox::DEFAULT_TIME_SAMPLES
}
fn default_state_samples() -> usize {
    SampleBox::DEFAULT_STATE_SAMPLES
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::schema("<root>", e.to_string()))?;
        Self::from_value(value)
    }

    /// Parses and validates; errors name the offending key.
    pub fn from_value(value: Value) -> Result<Self, CliError> {
        let Some(obj) = value.as_object() else {
            return Err(CliError::schema("<root>", "expected a JSON object"));
        };
        if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !obj.contains_key(**k)) {
            return Err(CliError::schema(*missing, "required key is missing"));
        }
        let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            let key = match path.as_str() {
                "." | "" => unknown_field(&inner).unwrap_or_else(|| "<root>".into()),
                p => p.to_string(),
            };
            CliError::schema(key, inner)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(CliError::schema(key, "must be finite"))
            }
        };
        finite("t0", self.t0)?;
        finite("T", self.t_end)?;
        if self.t_end <= self.t0 {
            return Err(CliError::schema("T", format!("must exceed t0 = {}", self.t0)));
        }
        if self.grid_n < 3 || self.grid_n % 2 == 0 {
            return Err(CliError::schema("grid_n", format!("must be odd and at least 3, got {}", self.grid_n)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::schema("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(CliError::schema("max_iter", "must be at least 1"));
        }
        if !(self.coercivity_floor >= 0.0 && self.coercivity_floor.is_finite()) {
            return Err(CliError::schema("coercivity_floor", "must be finite and nonnegative"));
        }
        let model = Model::build(&self.model, &self.params)?;
        let (d, k) = (model.state_dim(), model.input_dim());
        for (key, v) in [("x0", &self.x0), ("x1", &self.x1)] {
            if v.len() != d {
                return Err(CliError::schema(key, format!("expected {d} entries for model `{}`, got {}", self.model, v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::schema(key, "entries must be finite"));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != k || init.iter().any(|x| !x.is_finite()) {
                return Err(CliError::schema("init", format!("expected {k} finite entries")));
            }
        }
        if let Some(b) = &self.sample_box {
            if b.lower.len() != d || b.upper.len() != d {
                return Err(CliError::schema("box", format!("corners need {d} entries")));
            }
            self.sample_box_for(b).map_err(|e| CliError::schema("box", e.to_string()))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.t0, self.t_end, self.grid_n).map_err(|e| CliError::schema("grid_n", e.to_string()))
    }

    pub fn problem(&self) -> Result<TransferProblem, CliError> {
        let anchor = match self.anchor {
            AnchorName::Initial => Anchor::Initial,
            AnchorName::Terminal => Anchor::Terminal,
        };
        Ok(TransferProblem::new(DVector::from_vec(self.x0.clone()), DVector::from_vec(self.x1.clone()), self.grid()?, anchor))
    }

    pub fn options(&self) -> SynthesisOptions {
        SynthesisOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            coercivity_floor: self.coercivity_floor,
            policy: match self.coercivity_policy {
                PolicyName::Warn => CoercivityPolicy::Warn,
                PolicyName::Abort => CoercivityPolicy::Abort,
            },
            ..SynthesisOptions::default()
        }
    }

    fn sample_box_for(&self, b: &BoxConfig) -> steer_core::Result<SampleBox> {
        SampleBox::new(self.t0, self.t_end, b.n_t, DVector::from_vec(b.lower.clone()), DVector::from_vec(b.upper.clone()), b.n_x)
    }

    pub fn sample_box(&self) -> Option<SampleBox> {
        self.sample_box.as_ref().and_then(|b| self.sample_box_for(b).ok())
    }

    /// Command-line overrides, revalidated.
    pub fn with_overrides(mut self, grid_n: Option<usize>, tol: Option<f64>) -> Result<Self, CliError> {
        if let Some(n) = grid_n {
            self.grid_n = n;
        }
        if let Some(t) = tol {
            self.tol = t;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Pulls the field name out of serde's "unknown field `x`" message.
fn unknown_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}
