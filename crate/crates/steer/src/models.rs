//! Builtin models addressable by name from a config.

use std::collections::BTreeMap;

use steer_core::synthesis::{baseline_fl_full, baseline_fl_pendulum, baseline_fl_unicycle, SynthesisReport};
use steer_core::system::{LinearSystem, Pendulum, PendulumParams, RecurrentNetwork, Unicycle};
use steer_core::{SteerError, SystemModel, TransferProblem};

use crate::error::CliError;

pub const MODEL_NAMES: [&str; 4] = ["pendulum", "rnn3", "unicycle", "double_integrator"];

#[derive(Debug, Clone)]
pub enum Model {
    Pendulum(Pendulum),
    Rnn(RecurrentNetwork),
    Unicycle(Unicycle),
    Linear(LinearSystem),
}

impl Model {
    pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        let model = match name {
            "pendulum" => {
                let mut p = PendulumParams::default();
                for (key, &value) in params {
                    let slot = match key.as_str() {
                        "g" => &mut p.g,
                        "ell0" => &mut p.ell0,
                        "ell1" => &mut p.ell1,
                        "mass" => &mut p.mass,
                        "nu" => &mut p.nu,
                        "omega" => &mut p.omega,
                        "beta" => &mut p.beta,
                        _ => return Err(CliError::schema(format!("params.{key}"), "not a pendulum parameter")),
                    };
                    *slot = value;
                }
                return Pendulum::new(p).map(Model::Pendulum).map_err(|e| CliError::schema("params", e.to_string()));
            }
            "rnn3" | "rnn" => Model::Rnn(RecurrentNetwork::standard()),
            "unicycle" => Model::Unicycle(Unicycle),
            "double_integrator" | "lti" => Model::Linear(LinearSystem::double_integrator()),
            other => {
                return Err(CliError::schema("model", format!("unknown model `{other}`, expected one of {MODEL_NAMES:?}")));
            }
        };
        if let Some(key) = params.keys().next() {
            return Err(CliError::schema(format!("params.{key}"), format!("model `{name}` takes no parameters")));
        }
        Ok(model)
    }

    pub fn system(&self) -> &dyn SystemModel {
        match self {
            Model::Pendulum(p) => p,
            Model::Rnn(r) => r,
            Model::Unicycle(u) => u,
            Model::Linear(l) => l,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.system().state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.system().input_dim()
    }

    /// The feedback-linearization baseline that fits this model.
    pub fn baseline(&self, problem: &TransferProblem) -> Result<SynthesisReport, SteerError> {
        match self {
            Model::Pendulum(p) => baseline_fl_pendulum(p, problem),
            Model::Unicycle(_) => baseline_fl_unicycle(problem),
            Model::Rnn(r) => baseline_fl_full(r, problem),
            Model::Linear(l) => baseline_fl_full(l, problem),
        }
    }
}
