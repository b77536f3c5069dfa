//! Many-particle simulation of the one-dimensional Hughes evacuation model with
//! linear running cost.
//!
//! The crowd is represented by `n + 1` particles that split into two groups at
//! the turning point and follow the leader towards the nearest-cost door.
//!
//! Two time integrators are provided: an event-driven one that resolves exits
//! and direction switches exactly, and the explicit fully discrete scheme.

// `!(a < b)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datum;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod observables;
pub mod turning;

pub use datum::{atomize, datum_mass, InitialDatum, ParticleInit, Piece};
pub use dynamics::{
    run_to_evacuation, Direction, DiscreteParams, Door, Engine, EventLog, EventTolerances,
    ExitEvent, ParticleSystem, RunOptions, RunResult, Sample, SwitchEvent,
};
pub use error::{Error, Result};
pub use model::{CostModel, ModelConfig, VelocityModel};
pub use observables::{wasserstein1, DensityProfile, PiecewiseLinear, PseudoInverse};
pub use turning::{build_z, solve_xi, solve_xi_discrete, solve_zeta, CostProfile, TurningState};
