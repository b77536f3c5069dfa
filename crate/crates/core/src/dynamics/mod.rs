//! Particle dynamics: an event-driven integrator for the continuous-time
//! follow-the-leader system and the explicit fully discrete scheme.

mod discrete;
mod event;
mod rk;

use serde::Serialize;

pub use discrete::{cfl_bound, step_fully_discrete, DiscreteParams, DiscreteState};
pub use event::{step_event_driven, EventTolerances, ParticleSystem};

use crate::datum::ParticleInit;
use crate::error::{Error, Result};
use crate::model::VelocityModel;
use crate::turning::{solve_xi, solve_xi_discrete, turning_state};

/// Distance to a door below which a particle counts as having left.
pub const EXIT_DISTANCE: f64 = 1e-13;

/// Tolerated negative gap before ordering is declared broken.
pub const ORDERING_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Door {
    Left,
    Right,
}

impl Door {
    pub fn position(self) -> f64 {
        match self {
            Door::Left => -1.0,
            Door::Right => 1.0,
        }
    }
}

/// A particle reaching a door.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExitEvent {
    pub time: f64,
    pub particle: usize,
    pub door: Door,
    /// Turning point just before and just after the exit (event engine only).
    pub zeta_before: Option<f64>,
    pub zeta_after: Option<f64>,
}

/// A particle changing its direction of motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub time: f64,
    pub particle: usize,
    /// Direction after the switch.
    pub direction: Direction,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EventLog {
    pub exits: Vec<ExitEvent>,
    pub switches: Vec<SwitchEvent>,
}

impl EventLog {
    pub fn extend(&mut self, other: EventLog) {
        self.exits.extend(other.exits);
        self.switches.extend(other.switches);
    }

    pub fn is_empty(&self) -> bool {
        self.exits.is_empty() && self.switches.is_empty()
    }
}

/// Snapshot of the particle configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub positions: Vec<f64>,
    pub zeta: f64,
    pub xi: f64,
    pub xi_discrete: f64,
}

impl Sample {
    pub fn capture(t: f64, positions: &[f64], ell: f64, alpha: f64) -> Self {
        Self {
            t,
            positions: positions.to_vec(),
            zeta: turning_state(positions, ell, alpha).zeta,
            xi: solve_xi(positions, ell, alpha),
            xi_discrete: solve_xi_discrete(positions, ell, alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    EventDriven(EventTolerances),
    FullyDiscrete(DiscreteParams),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::EventDriven(_) => "event",
            Engine::FullyDiscrete(_) => "discrete",
        }
    }
}

/// What to record along a run.
#[derive(Default, Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Spacing of regular snapshots; `None` keeps only the initial and final states.
    pub sample_every: Option<f64>,
    /// Also snapshot right after every exit (event engine).
    pub sample_events: bool,
    /// Stop early at this time instead of running to evacuation.
    pub t_end: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub engine: &'static str,
    pub alpha: f64,
    pub n: usize,
    pub ell: f64,
    pub mass: f64,
    pub r_max: f64,
    /// `None` when the run stopped at `t_end` before everyone left.
    pub evacuation_time: Option<f64>,
    pub final_time: f64,
    pub events: EventLog,
    pub samples: Vec<Sample>,
    /// Smallest and largest gap seen at any step.
    pub min_gap: f64,
    pub max_gap: f64,
    pub steps: usize,
}

/// Time after which a run is abandoned.
pub fn safety_cap(model: &VelocityModel, mass: f64) -> f64 {
    let f_max = model
        .flux(model.critical_density())
        .unwrap_or(0.0)
        .max(f64::MIN_POSITIVE);
    10.0 * (2.0 / model.v_max() + mass / f_max)
}

pub(crate) fn gap_extremes(x: &[f64]) -> (f64, f64) {
    x.windows(2)
        .map(|w| w[1] - w[0])
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), g| {
            (lo.min(g), hi.max(g))
        })
}

pub(crate) fn check_ordering(x: &[f64], t: f64) -> Result<()> {
    for (i, w) in x.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap < -ORDERING_TOLERANCE || gap.is_nan() {
            return Err(Error::OrderingViolated { index: i, gap, t });
        }
    }
    Ok(())
}

/// Runs the chosen engine from `init` until every particle has left the corridor.
pub fn run_to_evacuation(
    engine: &Engine,
    init: &ParticleInit,
    model: &VelocityModel,
    alpha: f64,
    options: &RunOptions,
) -> Result<RunResult> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidModel(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    if let Some(every) = options.sample_every {
        if !(every.is_finite() && every > 0.0) {
            return Err(Error::Config(format!(
                "sample spacing must be positive, got {every}"
            )));
        }
    }
    match engine {
        Engine::EventDriven(tol) => event::run(init, model, alpha, tol, options),
        Engine::FullyDiscrete(params) => discrete::run(init, model, alpha, params, options),
    }
}
