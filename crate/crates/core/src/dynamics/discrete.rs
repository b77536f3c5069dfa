//! Explicit time stepping of the particle scheme on a uniform grid.

use log::warn;

use super::{
    gap_extremes, safety_cap, Direction, Door, EventLog, ExitEvent, RunOptions, RunResult, Sample,
    SwitchEvent,
};
use crate::datum::ParticleInit;
use crate::error::{Error, Result};
use crate::model::VelocityModel;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiscreteParams {
    /// Time step; `None` uses the largest stable step.
    pub dt: Option<f64>,
    pub allow_cfl_violation: bool,
}

/// Largest time step keeping every gap at least `ell / rho_max`.
pub fn cfl_bound(mass: f64, model: &VelocityModel, n: usize) -> f64 {
    mass / (model.rho_max() * model.v_max() * n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteState {
    /// Step counter; the time is `h * dt`.
    pub h: usize,
    pub dt: f64,
    pub positions: Vec<f64>,
    pub ell: f64,
    pub alpha: f64,
    /// Direction chosen by each particle in the last step.
    pub directions: Vec<Direction>,
}

impl DiscreteState {
    pub fn new(init: &ParticleInit, alpha: f64, dt: f64) -> Self {
        let n = init.n();
        Self {
            h: 0,
            dt,
            positions: init.positions.clone(),
            ell: init.ell,
            alpha,
            directions: (0..=n)
                .map(|i| {
                    if i == 0 {
                        Direction::Left
                    } else {
                        Direction::Right
                    }
                })
                .collect(),
        }
    }

    pub fn t(&self) -> f64 {
        self.h as f64 * self.dt
    }

    pub fn is_evacuated(&self) -> bool {
        self.positions.iter().all(|x| x.abs() >= 1.0)
    }

    /// Direction of each particle under the counting rule: an interior
    /// particle heads left when it is closer to `-1` in the cost metric,
    /// the outermost two always head for their own door.
    pub fn choose_directions(&self) -> Vec<Direction> {
        let x = &self.positions;
        let n = x.len() - 1;
        let sorted = x.windows(2).all(|w| w[0] < w[1]);
        let lo = x.partition_point(|&p| p <= -1.0);
        let hi = x.partition_point(|&p| p < 1.0);
        let scale = if self.alpha > 0.0 {
            2.0 / (self.alpha * self.ell)
        } else {
            0.0
        };
        (0..=n)
            .map(|i| {
                if i == 0 {
                    return Direction::Left;
                }
                if i == n {
                    return Direction::Right;
                }
                let left = if self.alpha == 0.0 {
                    x[i] < 0.0
                } else {
                    let (ahead, behind) = if sorted {
                        (hi.saturating_sub(i + 1), i.saturating_sub(lo))
                    } else {
                        let ahead = x.iter().filter(|&&p| x[i] < p && p < 1.0).count();
                        let behind = x.iter().filter(|&&p| -1.0 < p && p < x[i]).count();
                        (ahead, behind)
                    };
                    scale * x[i] < ahead as f64 - behind as f64
                };
                if left {
                    Direction::Left
                } else {
                    Direction::Right
                }
            })
            .collect()
    }

    /// One explicit step with the given directions.
    pub fn step_with(&mut self, directions: &[Direction], model: &VelocityModel) {
        let x = &self.positions;
        let n = x.len() - 1;
        let dt = self.dt;
        let ell = self.ell;
        let next: Vec<f64> = (0..=n)
            .map(|i| match directions[i] {
                Direction::Left if i == 0 => x[0] - model.v_max() * dt,
                Direction::Right if i == n => x[n] + model.v_max() * dt,
                Direction::Left => x[i] - model.eval_v_plus(ell / (x[i] - x[i - 1])) * dt,
                Direction::Right => x[i] + model.eval_v_plus(ell / (x[i + 1] - x[i])) * dt,
            })
            .collect();
        self.positions = next;
        self.directions = directions.to_vec();
        self.h += 1;
    }
}

/// Advances the fully discrete scheme by one time step.
pub fn step_fully_discrete(state: &DiscreteState, model: &VelocityModel) -> DiscreteState {
    let mut next = state.clone();
    let directions = state.choose_directions();
    next.step_with(&directions, model);
    next
}

pub(super) fn run(
    init: &ParticleInit,
    model: &VelocityModel,
    alpha: f64,
    params: &DiscreteParams,
    options: &RunOptions,
) -> Result<RunResult> {
    let n = init.n();
    let bound = cfl_bound(init.mass, model, n);
    let dt = params.dt.unwrap_or(bound);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if dt > bound * (1.0 + 1e-12) {
        if !params.allow_cfl_violation {
            return Err(Error::CflViolation { dt, bound });
        }
        warn!("time step {dt} exceeds the CFL bound {bound}; ordering may break");
    }

    let cap = safety_cap(model, init.mass);
    let max_steps = (options.t_end.map_or(cap, |t| t.min(cap)) / dt).ceil() as usize;
    let every = options
        .sample_every
        .map(|d| ((d / dt).round() as usize).max(1));

    let mut state = DiscreteState::new(init, alpha, dt);
    let mut events = EventLog::default();
    let mut exited = vec![false; n + 1];
    let record_exits = |state: &DiscreteState, events: &mut EventLog, exited: &mut [bool]| {
        for (i, &x) in state.positions.iter().enumerate() {
            if !exited[i] && x.abs() >= 1.0 {
                exited[i] = true;
                events.exits.push(ExitEvent {
                    time: state.t(),
                    particle: i,
                    door: if x < 0.0 { Door::Left } else { Door::Right },
                    zeta_before: None,
                    zeta_after: None,
                });
            }
        }
    };
    record_exits(&state, &mut events, &mut exited);

    let snap = |s: &DiscreteState| Sample::capture(s.t(), &s.positions, s.ell, s.alpha);
    let mut samples = vec![snap(&state)];
    let (mut min_gap, mut max_gap) = gap_extremes(&state.positions);
    let mut previous: Option<Vec<Direction>> = None;

    while !state.is_evacuated() {
        if state.h >= max_steps {
            if options.t_end.is_some_and(|t| t <= cap) {
                break;
            }
            return Err(Error::Timeout { cap });
        }
        let directions = state.choose_directions();
        if let Some(prev) = &previous {
            for (i, (a, b)) in prev.iter().zip(&directions).enumerate() {
                if a != b && !exited[i] {
                    events.switches.push(SwitchEvent {
                        time: state.t(),
                        particle: i,
                        direction: *b,
                    });
                }
            }
        }
        state.step_with(&directions, model);
        previous = Some(directions);
        record_exits(&state, &mut events, &mut exited);
        let (lo, hi) = gap_extremes(&state.positions);
        min_gap = min_gap.min(lo);
        max_gap = max_gap.max(hi);
        if every.is_some_and(|k| state.h.is_multiple_of(k)) {
            samples.push(snap(&state));
        }
    }
    if samples.last().map(|s| s.t) != Some(state.t()) {
        samples.push(snap(&state));
    }
    let evacuated = state.is_evacuated();
    Ok(RunResult {
        engine: "discrete",
        alpha,
        n,
        ell: init.ell,
        mass: init.mass,
        r_max: init.r_max,
        evacuation_time: evacuated.then(|| state.t()),
        final_time: state.t(),
        events,
        samples,
        min_gap,
        max_gap,
        steps: state.h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_model() -> VelocityModel {
        VelocityModel::affine(1.0, 1.0).unwrap()
    }

    #[test]
    fn single_step_displacements() {
        let init = ParticleInit::from_positions(vec![-0.5, -0.25, 0.25, 0.5], 0.1).unwrap();
        let state = DiscreteState::new(&init, 0.0, 0.01);
        let next = step_fully_discrete(&state, &unit_model());
        let expect = [
            -0.5 - 0.01,
            -0.25 - (1.0 - 0.1 / 0.25) * 0.01,
            0.25 + (1.0 - 0.1 / 0.25) * 0.01,
            0.5 + 0.01,
        ];
        for (a, b) in next.positions.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(next.h, 1);
        assert_eq!(next.t(), 0.01);
    }

    #[test]
    fn counting_rule_matches_hand_count() {
        // particle 1 at 0.1: one particle ahead inside, one behind inside
        let init = ParticleInit::from_positions(vec![-0.2, 0.1, 0.3, 0.5], 0.1).unwrap();
        let state = DiscreteState::new(&init, 1.0, 0.01);
        let dirs = state.choose_directions();
        // 20 * 0.1 = 2 vs 2 - 1 = 1: right
        assert_eq!(dirs[1], Direction::Right);
        // particle 2 at 0.3: 6 vs 1 - 2 = -1: right
        assert_eq!(dirs[2], Direction::Right);
        let init = ParticleInit::from_positions(vec![-0.2, 0.01, 0.3, 0.5, 0.6], 0.1).unwrap();
        let state = DiscreteState::new(&init, 1.0, 0.01);
        // 20 * 0.01 = 0.2 vs 3 - 1 = 2: left
        assert_eq!(state.choose_directions()[1], Direction::Left);
    }

    #[test]
    fn unsorted_fallback_agrees_on_sorted_input() {
        let init =
            ParticleInit::from_positions(vec![-0.9, -0.4, -0.1, 0.05, 0.3, 0.8], 0.05).unwrap();
        let state = DiscreteState::new(&init, 1.5, 0.01);
        let fast = state.choose_directions();
        let x = &state.positions;
        let slow: Vec<Direction> = (1..x.len() - 1)
            .map(|i| {
                let ahead = x.iter().filter(|&&p| x[i] < p && p < 1.0).count() as f64;
                let behind = x.iter().filter(|&&p| -1.0 < p && p < x[i]).count() as f64;
                if 2.0 / (1.5 * 0.05) * x[i] < ahead - behind {
                    Direction::Left
                } else {
                    Direction::Right
                }
            })
            .collect();
        assert_eq!(&fast[1..x.len() - 1], &slow[..]);
    }

    #[test]
    fn cfl_guard_rejects_large_steps() {
        let init = ParticleInit::from_positions(vec![-0.5, 0.0, 0.5], 0.1).unwrap();
        let params = DiscreteParams {
            dt: Some(0.2),
            allow_cfl_violation: false,
        };
        let err = run(&init, &unit_model(), 1.0, &params, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
        let params = DiscreteParams {
            dt: Some(0.2),
            allow_cfl_violation: true,
        };
        assert!(run(&init, &unit_model(), 1.0, &params, &RunOptions::default()).is_ok());
    }
}
