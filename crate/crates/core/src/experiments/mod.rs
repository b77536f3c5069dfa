//! Single runs, alpha sweeps and convergence studies, with their file outputs.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{parse_alpha_range, Config, ConvergeSection, EngineKind, SweepSection};

use crate::datum::{InitialDatum, ParticleInit};
use crate::dynamics::{
    cfl_bound, run_to_evacuation, Engine, EventTolerances, RunOptions, RunResult,
};
use crate::error::{Error, Result};
use crate::model::VelocityModel;
use crate::observables::{block_reference, DensityProfile};

/// Float formatting used in every output file: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Column descriptions of every CSV file written by the tool.
pub const SCHEMA: &str = r#"{
  "float_format": "scientific, 17 significant digits",
  "files": {
    "trajectories.csv": {
      "t": "time",
      "particle": "particle index, 0 is leftmost",
      "x": "position"
    },
    "turning.csv": {
      "t": "time",
      "zeta": "turning point balancing costs over particles inside the corridor",
      "xi": "turning point balancing costs over the whole corridor",
      "xi_discrete": "xi from the particle-counting form, solved by bisection"
    },
    "density.csv": {
      "t": "time",
      "x_left": "left end of a gap",
      "x_right": "right end of a gap",
      "rho": "density ell / (x_right - x_left) on the gap"
    },
    "events.csv": {
      "kind": "exit or switch",
      "time": "event time",
      "particle": "particle index",
      "label": "door for exits, new direction for switches",
      "zeta_before": "turning point just before an exit (event engine)",
      "zeta_after": "turning point just after an exit (event engine)"
    },
    "sweep.csv": {
      "alpha": "density weight in the cost",
      "evacuation_time": "time at which the last particle leaves",
      "exits": "number of exit events",
      "switches": "number of direction changes",
      "steps": "integration steps taken"
    },
    "convergence.csv": {
      "n": "number of gaps",
      "ell": "mass per gap",
      "l1_error": "L1 distance on x >= 0 to the exact solution at the sample time",
      "rate": "log2 of the error ratio to the previous row"
    }
  }
}
"#;

pub fn write_schema(dir: &Path) -> Result<()> {
    write_file(&dir.join("schema.json"), SCHEMA)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub engine: &'static str,
    pub alpha: f64,
    pub n: usize,
    pub ell: f64,
    pub mass: f64,
    pub r_max: f64,
    pub dt: Option<f64>,
    pub cfl_bound: f64,
    pub evacuation_time: Option<f64>,
    pub final_time: f64,
    pub steps: usize,
    pub exits: usize,
    pub switches: usize,
    pub min_gap: f64,
    pub max_gap: f64,
}

impl RunSummary {
    fn new(result: &RunResult, dt: Option<f64>, cfl: f64) -> Self {
        Self {
            engine: result.engine,
            alpha: result.alpha,
            n: result.n,
            ell: result.ell,
            mass: result.mass,
            r_max: result.r_max,
            dt,
            cfl_bound: cfl,
            evacuation_time: result.evacuation_time,
            final_time: result.final_time,
            steps: result.steps,
            exits: result.events.exits.len(),
            switches: result.events.switches.len(),
            min_gap: result.min_gap,
            max_gap: result.max_gap,
        }
    }
}

/// Everything a single run needs, resolved from a configuration.
pub struct Setup {
    pub model: VelocityModel,
    pub datum: InitialDatum,
    pub init: ParticleInit,
    pub engine: Engine,
    pub cfl_bound: f64,
}

impl Setup {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let model = cfg.velocity_model()?;
        let datum = cfg.datum()?;
        let init = datum.atomize(cfg.run.n)?;
        let cfl = cfl_bound(init.mass, &model, init.n());
        Ok(Self {
            engine: cfg.engine(),
            model,
            datum,
            init,
            cfl_bound: cfl,
        })
    }

    pub fn dt(&self) -> Option<f64> {
        match self.engine {
            Engine::FullyDiscrete(p) => Some(p.dt.unwrap_or(self.cfl_bound)),
            Engine::EventDriven(_) => None,
        }
    }
}

/// Runs one simulation and writes its trajectories, turning points, density
/// snapshots, events and summary into `out`.
pub fn run_single(cfg: &Config, out: &Path) -> Result<RunSummary> {
    let setup = Setup::from_config(cfg)?;
    let options = RunOptions {
        sample_every: Some(cfg.run.sample_every.unwrap_or(setup.cfl_bound)),
        sample_events: true,
        t_end: cfg.run.t_end,
    };
    let result = run_to_evacuation(
        &setup.engine,
        &setup.init,
        &setup.model,
        cfg.run.alpha,
        &options,
    )?;
    ensure_dir(out)?;
    write_run_outputs(&result, out)?;
    let summary = RunSummary::new(&result, setup.dt(), setup.cfl_bound);
    write_json(&out.join("summary.json"), &summary)?;
    write_schema(out)?;
    Ok(summary)
}

pub fn write_run_outputs(result: &RunResult, out: &Path) -> Result<()> {
    let mut traj = String::from("t,particle,x\n");
    let mut turning = String::from("t,zeta,xi,xi_discrete\n");
    let mut density = String::from("t,x_left,x_right,rho\n");
    for s in &result.samples {
        let t = fmt_f64(s.t);
        for (i, x) in s.positions.iter().enumerate() {
            let _ = writeln!(traj, "{t},{i},{}", fmt_f64(*x));
        }
        let _ = writeln!(
            turning,
            "{t},{},{},{}",
            fmt_f64(s.zeta),
            fmt_f64(s.xi),
            fmt_f64(s.xi_discrete)
        );
        for w in s.positions.windows(2) {
            let _ = writeln!(
                density,
                "{t},{},{},{}",
                fmt_f64(w[0]),
                fmt_f64(w[1]),
                fmt_f64(result.ell / (w[1] - w[0]))
            );
        }
    }
    let mut events = String::from("kind,time,particle,label,zeta_before,zeta_after\n");
    for e in &result.events.exits {
        let door = match e.door {
            crate::dynamics::Door::Left => "left",
            crate::dynamics::Door::Right => "right",
        };
        let _ = writeln!(
            events,
            "exit,{},{},{door},{},{}",
            fmt_f64(e.time),
            e.particle,
            fmt_opt(e.zeta_before),
            fmt_opt(e.zeta_after)
        );
    }
    for e in &result.events.switches {
        let dir = match e.direction {
            crate::dynamics::Direction::Left => "left",
            crate::dynamics::Direction::Right => "right",
        };
        let _ = writeln!(events, "switch,{},{},{dir},,", fmt_f64(e.time), e.particle);
    }
    write_file(&out.join("trajectories.csv"), &traj)?;
    write_file(&out.join("turning.csv"), &turning)?;
    write_file(&out.join("density.csv"), &density)?;
    write_file(&out.join("events.csv"), &events)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub evacuation_time: f64,
    pub exits: usize,
    pub switches: usize,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Jump {
    pub alpha_from: f64,
    pub alpha_to: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub argmin_alpha: f64,
    pub min_time: f64,
    pub jump_threshold: f64,
    pub jumps: Vec<Jump>,
}

/// Evacuation time over the alpha grid, in parallel; results stay ordered by alpha.
pub fn sweep(cfg: &Config) -> Result<SweepReport> {
    let setup = Setup::from_config(cfg)?;
    let grid = cfg.alpha_grid()?;
    let options = RunOptions::default();
    let points = grid
        .par_iter()
        .map(|&alpha| {
            let r = run_to_evacuation(&setup.engine, &setup.init, &setup.model, alpha, &options)?;
            Ok(SweepPoint {
                alpha,
                evacuation_time: r
                    .evacuation_time
                    .ok_or(Error::Timeout { cap: r.final_time })?,
                exits: r.events.exits.len(),
                switches: r.events.switches.len(),
                steps: r.steps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_sweep(points, cfg.sweep.jump_threshold))
}

pub fn summarize_sweep(points: Vec<SweepPoint>, jump_threshold: f64) -> SweepReport {
    let best = points
        .iter()
        .min_by(|a, b| a.evacuation_time.total_cmp(&b.evacuation_time))
        .copied();
    let jumps = points
        .windows(2)
        .filter_map(|w| {
            let delta = w[1].evacuation_time - w[0].evacuation_time;
            (delta.abs() > jump_threshold).then_some(Jump {
                alpha_from: w[0].alpha,
                alpha_to: w[1].alpha,
                delta,
            })
        })
        .collect();
    SweepReport {
        argmin_alpha: best.map_or(f64::NAN, |b| b.alpha),
        min_time: best.map_or(f64::NAN, |b| b.evacuation_time),
        jump_threshold,
        jumps,
        points,
    }
}

pub fn run_sweep(cfg: &Config, out: &Path) -> Result<SweepReport> {
    let report = sweep(cfg)?;
    ensure_dir(out)?;
    let mut csv = String::from("alpha,evacuation_time,exits,switches,steps\n");
    for p in &report.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(p.alpha),
            fmt_f64(p.evacuation_time),
            p.exits,
            p.switches,
            p.steps
        );
    }
    write_file(&out.join("sweep.csv"), &csv)?;
    #[derive(Serialize)]
    struct Jumps<'a> {
        argmin_alpha: f64,
        min_time: f64,
        jump_threshold: f64,
        jumps: &'a [Jump],
    }
    write_json(
        &out.join("jumps.json"),
        &Jumps {
            argmin_alpha: report.argmin_alpha,
            min_time: report.min_time,
            jump_threshold: report.jump_threshold,
            jumps: &report.jumps,
        },
    )?;
    write_schema(out)?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub ell: f64,
    pub l1_error: f64,
    /// `log2` of the error ratio to the previous resolution.
    pub rate: Option<f64>,
}

/// L1 distance on the right half-line between the particle density and the
/// exact solution for a symmetric block, at each resolution of the study.
pub fn convergence(cfg: &Config) -> Result<Vec<ConvergencePoint>> {
    let model = cfg.velocity_model()?;
    let c = &cfg.converge;
    let datum = InitialDatum::block(-c.half_width, c.half_width, c.value, model.rho_max())?;
    let reference = block_reference(&model, c.value, c.half_width, c.sample_time)?;
    let engine = match cfg.run.engine {
        EngineKind::Event => Engine::EventDriven(EventTolerances::default()),
        EngineKind::Discrete => cfg.engine(),
    };
    let options = RunOptions {
        t_end: Some(c.sample_time),
        ..RunOptions::default()
    };
    let errors = c
        .n_list
        .par_iter()
        .map(|&n| {
            let init = datum.atomize(n)?;
            let run = match engine {
                // a fixed step has to land on the sample time
                Engine::FullyDiscrete(mut p) => {
                    let bound = cfl_bound(init.mass, &model, n);
                    let dt = p.dt.unwrap_or(bound);
                    p.dt = Some(c.sample_time / (c.sample_time / dt).ceil());
                    run_to_evacuation(
                        &Engine::FullyDiscrete(p),
                        &init,
                        &model,
                        cfg.run.alpha,
                        &options,
                    )?
                }
                e => run_to_evacuation(&e, &init, &model, cfg.run.alpha, &options)?,
            };
            let last = run.samples.last().expect("runs keep their final state");
            let profile = DensityProfile::new(&last.positions, init.ell);
            Ok((
                n,
                init.ell,
                profile.l1_distance_in(&reference, 0.0, f64::INFINITY),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<ConvergencePoint> = Vec::with_capacity(errors.len());
    for (n, ell, err) in errors {
        let rate = points.last().map(|p| (p.l1_error / err).log2());
        points.push(ConvergencePoint {
            n,
            ell,
            l1_error: err,
            rate,
        });
    }
    Ok(points)
}

pub fn run_convergence(cfg: &Config, out: &Path) -> Result<Vec<ConvergencePoint>> {
    let points = convergence(cfg)?;
    ensure_dir(out)?;
    let mut csv = String::from("n,ell,l1_error,rate\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            p.n,
            fmt_f64(p.ell),
            fmt_f64(p.l1_error),
            fmt_opt(p.rate)
        );
    }
    write_file(&out.join("convergence.csv"), &csv)?;
    write_schema(out)?;
    Ok(points)
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub model_checks_passed: bool,
    pub speed_decreasing: bool,
    pub flux_concave: bool,
    pub rho_v_prime_nonincreasing: bool,
    pub n: usize,
    pub ell: f64,
    pub mass: f64,
    pub r_max: f64,
    pub cfl_bound: f64,
    pub dt: Option<f64>,
    pub cfl_satisfied: bool,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.model_checks_passed && self.cfl_satisfied
    }
}

/// Checks the configuration without running it: model assumptions, datum
/// admissibility and the time-step restriction.
pub fn validate(cfg: &Config) -> Result<ValidationReport> {
    let setup = Setup::from_config(cfg)?;
    let report = setup
        .model
        .validate_assumptions(crate::model::DEFAULT_CHECK_POINTS)?;
    let dt = setup.dt();
    Ok(ValidationReport {
        model_checks_passed: report.all_passed(),
        speed_decreasing: report.speed_decreasing.passed,
        flux_concave: report.flux_concave.passed,
        rho_v_prime_nonincreasing: report.rho_v_prime_nonincreasing.passed,
        n: setup.init.n(),
        ell: setup.init.ell,
        mass: setup.init.mass,
        r_max: setup.init.r_max,
        cfl_bound: setup.cfl_bound,
        dt,
        cfl_satisfied: dt.is_none_or(|dt| dt <= setup.cfl_bound * (1.0 + 1e-12)),
    })
}
