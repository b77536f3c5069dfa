//! TOML configuration for the command-line experiments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datum::{InitialDatum, Piece};
use crate::dynamics::{DiscreteParams, Engine, EventTolerances};
use crate::error::{Error, Result};
use crate::model::VelocityModel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Event,
    #[default]
    Discrete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub v_max: f64,
    pub rho_max: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            rho_max: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumSection {
    /// `[a, b, value]` triples.
    pub pieces: Vec<[f64; 3]>,
}

impl Default for DatumSection {
    fn default() -> Self {
        Self {
            pieces: vec![[-1.0, -0.5, 0.9], [-0.4, 0.0, 0.9]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n: usize,
    pub engine: EngineKind,
    pub alpha: f64,
    /// Discrete time step; the CFL bound when absent.
    pub dt: Option<f64>,
    pub allow_cfl_violation: bool,
    /// Snapshot spacing in time; every step of the CFL bound when absent.
    pub sample_every: Option<f64>,
    pub t_end: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n: 200,
            engine: EngineKind::Discrete,
            alpha: 1.3,
            dt: None,
            allow_cfl_violation: false,
            sample_every: None,
            t_end: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alpha_start: f64,
    pub alpha_stop: f64,
    pub alpha_step: f64,
    /// Smallest change in evacuation time between neighbouring values
    /// reported as a jump.
    pub jump_threshold: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            alpha_start: 0.0,
            alpha_stop: 20.0,
            alpha_step: 0.1,
            jump_threshold: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub n_list: Vec<usize>,
    pub sample_time: f64,
    /// Symmetric block `value` on `[-half_width, half_width)`.
    pub half_width: f64,
    pub value: f64,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            n_list: vec![25, 50, 100, 200],
            sample_time: 0.5,
            half_width: 0.6,
            value: 0.9,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub datum: DatumSection,
    pub run: RunSection,
    pub sweep: SweepSection,
    pub converge: ConvergeSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn velocity_model(&self) -> Result<VelocityModel> {
        VelocityModel::affine(self.model.v_max, self.model.rho_max)
    }

    pub fn datum(&self) -> Result<InitialDatum> {
        InitialDatum::new(
            self.datum
                .pieces
                .iter()
                .map(|&[a, b, value]| Piece::new(a, b, value)),
            self.model.rho_max,
        )
    }

    pub fn engine(&self) -> Engine {
        match self.run.engine {
            EngineKind::Event => Engine::EventDriven(EventTolerances::default()),
            EngineKind::Discrete => Engine::FullyDiscrete(DiscreteParams {
                dt: self.run.dt,
                allow_cfl_violation: self.run.allow_cfl_violation,
            }),
        }
    }

    /// Alpha grid of the sweep, each value rounded to twelve decimals so the
    /// grid does not accumulate drift from repeated addition.
    pub fn alpha_grid(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        if !(s.alpha_step > 0.0 && s.alpha_stop >= s.alpha_start && s.alpha_start >= 0.0) {
            return Err(Error::Config(format!(
                "bad alpha range {}:{}:{}",
                s.alpha_start, s.alpha_stop, s.alpha_step
            )));
        }
        let count = ((s.alpha_stop - s.alpha_start) / s.alpha_step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| ((s.alpha_start + k as f64 * s.alpha_step) * 1e12).round() / 1e12)
            .collect())
    }
}

/// Parses `start:stop:step`.
pub fn parse_alpha_range(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("alpha range must be start:stop:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut vals = [0.0; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p.trim().parse().map_err(|_| bad())?;
    }
    Ok((vals[0], vals[1], vals[2]))
}
