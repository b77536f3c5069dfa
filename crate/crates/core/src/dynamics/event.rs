//! Event-driven integration of the follow-the-leader system.
//!
//! Between exits the set of left movers is fixed and the positions solve a
//! smooth ODE, integrated with an adaptive Dormand-Prince pair. Exit times are
//! located by bisection; at each exit the turning point is recomputed and the
//! particles it passes over change direction.

use log::debug;

use super::rk::Dopri45;
use super::{
    check_ordering, gap_extremes, safety_cap, Direction, Door, EventLog, ExitEvent, RunOptions,
    RunResult, Sample, SwitchEvent, EXIT_DISTANCE,
};
use crate::datum::ParticleInit;
use crate::error::{Error, Result};
use crate::model::VelocityModel;
use crate::turning::{turning_state, CorridorWindow, CostProfile};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventTolerances {
    pub atol: f64,
    pub rtol: f64,
    /// Width of the bracket around each exit time.
    pub time_tol: f64,
}

impl Default for EventTolerances {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-10,
            time_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    Time,
    Exit,
    Evacuated,
}

/// State of the continuous-time particle system.
#[derive(Clone)]
pub struct ParticleSystem {
    t: f64,
    x: Vec<f64>,
    ell: f64,
    alpha: f64,
    model: VelocityModel,
    /// Particles `0..split` move left.
    split: usize,
    window: Option<CorridorWindow>,
    tol: EventTolerances,
    log: EventLog,
    h: f64,
    rk: Dopri45,
    trial: Vec<f64>,
    min_gap: f64,
    max_gap: f64,
    steps: usize,
}

impl std::fmt::Debug for ParticleSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParticleSystem")
            .field("t", &self.t)
            .field("x", &self.x)
            .field("split", &self.split)
            .field("window", &self.window)
            .finish()
    }
}

fn velocities(model: &VelocityModel, ell: f64, split: usize, x: &[f64], out: &mut [f64]) {
    let n = x.len() - 1;
    let v_max = model.v_max();
    for i in 0..=n {
        out[i] = if i < split {
            if i == 0 {
                -v_max
            } else {
                -model.eval_v_plus(ell / (x[i] - x[i - 1]))
            }
        } else if i == n {
            v_max
        } else {
            model.eval_v_plus(ell / (x[i + 1] - x[i]))
        };
    }
}

impl ParticleSystem {
    /// Places the particles at `init`; those already at a door leave at `t = 0`.
    pub fn new(
        init: &ParticleInit,
        model: VelocityModel,
        alpha: f64,
        tol: EventTolerances,
    ) -> Result<Self> {
        let mut x = init.positions.clone();
        let mut log = EventLog::default();
        for (i, xi) in x.iter_mut().enumerate() {
            let door = if *xi <= -1.0 + EXIT_DISTANCE {
                Door::Left
            } else if *xi >= 1.0 - EXIT_DISTANCE {
                Door::Right
            } else {
                continue;
            };
            *xi = door.position();
            log.exits.push(ExitEvent {
                time: 0.0,
                particle: i,
                door,
                zeta_before: None,
                zeta_after: None,
            });
        }
        check_ordering(&x, 0.0)?;
        let window = CorridorWindow::of(&x);
        let split = turning_state(&x, init.ell, alpha).split;
        let (min_gap, max_gap) = gap_extremes(&x);
        let dim = x.len();
        Ok(Self {
            t: 0.0,
            h: min_gap / (4.0 * model.v_max()),
            x,
            ell: init.ell,
            alpha,
            model,
            split,
            window,
            tol,
            log,
            rk: Dopri45::new(dim),
            trial: vec![0.0; dim],
            min_gap,
            max_gap,
            steps: 0,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of left movers; particles `0..split` head for the left door.
    pub fn split(&self) -> usize {
        self.split
    }

    pub fn direction(&self, i: usize) -> Direction {
        if i < self.split {
            Direction::Left
        } else {
            Direction::Right
        }
    }

    pub fn window(&self) -> Option<CorridorWindow> {
        self.window
    }

    pub fn is_evacuated(&self) -> bool {
        self.window.is_none()
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// Current velocities of all particles.
    pub fn velocities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        velocities(&self.model, self.ell, self.split, &self.x, &mut out);
        out
    }

    /// Candidates for the next exit: the first particle in the corridor if it
    /// moves left and the last one if it moves right.
    fn candidates(&self) -> [Option<(usize, Door)>; 2] {
        match self.window {
            None => [None, None],
            Some(w) => [
                (w.first < self.split).then_some((w.first, Door::Left)),
                (w.last >= self.split).then_some((w.last, Door::Right)),
            ],
        }
    }

    /// Signed distance to the exit threshold; non-positive once crossed.
    fn exit_margin(x: &[f64], (i, door): (usize, Door)) -> f64 {
        match door {
            Door::Left => x[i] + 1.0 - EXIT_DISTANCE,
            Door::Right => 1.0 - EXIT_DISTANCE - x[i],
        }
    }

    /// Integrates until `t_stop`, the next exit, or evacuation, whichever is first.
    pub(crate) fn advance(&mut self, t_stop: f64) -> Result<Stop> {
        if self.window.is_none() {
            return Ok(Stop::Evacuated);
        }
        let v_max = self.model.v_max();
        let candidates = self.candidates();
        let crossed = |x: &[f64]| {
            candidates
                .iter()
                .flatten()
                .any(|&c| Self::exit_margin(x, c) <= 0.0)
        };
        loop {
            if self.t >= t_stop {
                return Ok(Stop::Time);
            }
            let (min_gap, _) = gap_extremes(&self.x);
            let remaining = t_stop - self.t;
            let mut h = self.h.min(min_gap / (4.0 * v_max)).min(remaining);
            let (model, ell, split) = (&self.model, self.ell, self.split);
            let field = |y: &[f64], dy: &mut [f64]| velocities(model, ell, split, y, dy);
            let err = loop {
                let err = self.rk.step(
                    &field,
                    &self.x,
                    h,
                    &mut self.trial,
                    self.tol.atol,
                    self.tol.rtol,
                );
                if err <= 1.0 {
                    break err;
                }
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                if h < f64::EPSILON * self.t.max(1.0) {
                    return Err(Error::Unsupported(format!(
                        "step size underflow at t = {}",
                        self.t
                    )));
                }
            };
            self.steps += 1;
            let grow = if err > 0.0 {
                (0.9 * err.powf(-0.2)).min(5.0)
            } else {
                5.0
            };

            if !crossed(&self.trial) {
                self.t = if h == remaining { t_stop } else { self.t + h };
                std::mem::swap(&mut self.x, &mut self.trial);
                self.h = h * grow;
                self.after_step()?;
                continue;
            }

            // bisect the step size for the first crossing
            let (mut lo, mut hi) = (0.0, h);
            let mut probe = vec![0.0; self.x.len()];
            while hi - lo > self.tol.time_tol {
                let mid = 0.5 * (lo + hi);
                self.rk.step(&field, &self.x, mid, &mut probe, 1.0, 0.0);
                if crossed(&probe) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            self.rk.step(&field, &self.x, hi, &mut self.trial, 1.0, 0.0);
            std::mem::swap(&mut self.x, &mut self.trial);
            self.t += hi;
            self.h = h;
            self.after_step()?;
            return self.handle_exit(&candidates);
        }
    }

    fn after_step(&mut self) -> Result<()> {
        check_ordering(&self.x, self.t)?;
        let (lo, hi) = gap_extremes(&self.x);
        self.min_gap = self.min_gap.min(lo);
        self.max_gap = self.max_gap.max(hi);
        Ok(())
    }

    fn handle_exit(&mut self, candidates: &[Option<(usize, Door)>; 2]) -> Result<Stop> {
        let slack = self.model.v_max() * self.tol.time_tol;
        let leaving: Vec<(usize, Door)> = candidates
            .iter()
            .flatten()
            .copied()
            .filter(|&c| Self::exit_margin(&self.x, c) <= slack)
            .collect();
        let old_window = self.window.expect("exit requires a non-empty corridor");
        let mut first = old_window.first as isize;
        let mut last = old_window.last as isize;
        for &(i, door) in &leaving {
            self.x[i] = door.position();
            match door {
                Door::Left => first += 1,
                Door::Right => last -= 1,
            }
        }
        let new_window = if first <= last {
            Some(CorridorWindow {
                first: first as usize,
                last: last as usize,
            })
        } else {
            None
        };
        let zeta_before =
            CostProfile::with_window(&self.x, self.ell, self.alpha, Some(old_window)).root();
        let zeta_after = CostProfile::with_window(&self.x, self.ell, self.alpha, new_window).root();
        for &(i, door) in &leaving {
            self.log.exits.push(ExitEvent {
                time: self.t,
                particle: i,
                door,
                zeta_before: Some(zeta_before),
                zeta_after: Some(zeta_after),
            });
        }
        let bound = self.x.len() + 1;
        if self.log.exits.len() > bound {
            return Err(Error::TooManyExits {
                count: self.log.exits.len(),
                bound,
            });
        }
        self.window = new_window;
        if new_window.is_none() {
            debug!("evacuated at t = {}", self.t);
            return Ok(Stop::Evacuated);
        }

        if let [(_, door)] = leaving[..] {
            let below = self.x.partition_point(|&x| x < zeta_after);
            let old = self.split;
            let (new_split, switched, direction) = match door {
                Door::Left => {
                    let s = below.max(old);
                    (s, old..s, Direction::Left)
                }
                Door::Right => {
                    let s = below.min(old);
                    (s, s..old, Direction::Right)
                }
            };
            if switched.len() > 1 {
                debug!(
                    "{} particles switched at t = {} (zeta {} -> {})",
                    switched.len(),
                    self.t,
                    zeta_before,
                    zeta_after
                );
            }
            for particle in switched {
                self.log.switches.push(SwitchEvent {
                    time: self.t,
                    particle,
                    direction,
                });
            }
            self.split = new_split;
        }
        Ok(Stop::Exit)
    }
}

/// Advances `sys` to `t_end` (or evacuation) and returns the events on the way.
pub fn step_event_driven(sys: &mut ParticleSystem, t_end: f64) -> Result<EventLog> {
    let exits_before = sys.log.exits.len();
    let switches_before = sys.log.switches.len();
    while sys.advance(t_end)? == Stop::Exit {}
    Ok(EventLog {
        exits: sys.log.exits[exits_before..].to_vec(),
        switches: sys.log.switches[switches_before..].to_vec(),
    })
}

pub(super) fn run(
    init: &ParticleInit,
    model: &VelocityModel,
    alpha: f64,
    tol: &EventTolerances,
    options: &RunOptions,
) -> Result<RunResult> {
    let mut sys = ParticleSystem::new(init, model.clone(), alpha, *tol)?;
    let cap = safety_cap(model, init.mass);
    let stop_at = options.t_end.map_or(cap, |t| t.min(cap));
    let snap = |sys: &ParticleSystem| Sample::capture(sys.t, &sys.x, sys.ell, sys.alpha);
    let mut samples = vec![snap(&sys)];
    let mut k = 1usize;
    let mut evacuated = sys.is_evacuated();
    while !evacuated {
        let next = options
            .sample_every
            .map_or(f64::INFINITY, |d| k as f64 * d)
            .min(stop_at);
        match sys.advance(next)? {
            Stop::Evacuated => evacuated = true,
            Stop::Exit => {
                if options.sample_events {
                    samples.push(snap(&sys));
                }
            }
            Stop::Time => {
                if options.sample_every.is_some() && next < stop_at {
                    samples.push(snap(&sys));
                    k += 1;
                } else if options.t_end.is_some_and(|t| t <= cap) {
                    break;
                } else {
                    return Err(Error::Timeout { cap });
                }
            }
        }
    }
    if samples.last().map(|s| s.t) != Some(sys.t) {
        samples.push(snap(&sys));
    }
    Ok(RunResult {
        engine: "event",
        alpha,
        n: init.n(),
        ell: init.ell,
        mass: init.mass,
        r_max: init.r_max,
        evacuation_time: evacuated.then_some(sys.t),
        final_time: sys.t,
        min_gap: sys.min_gap,
        max_gap: sys.max_gap,
        steps: sys.steps,
        events: sys.log,
        samples,
    })
}
