#![allow(dead_code)]

use hughes_core::dynamics::{DiscreteParams, EventTolerances, RunOptions};
use hughes_core::observables::windowed_mass_drift;
use hughes_core::turning::turning_state;
use hughes_core::{
    run_to_evacuation, wasserstein1, DensityProfile, Door, Engine, InitialDatum, ParticleInit,
    Piece, RunResult, VelocityModel,
};
use rand::Rng;

pub const TOL: f64 = 1e-10;

pub fn unit_model() -> VelocityModel {
    VelocityModel::affine(1.0, 1.0).unwrap()
}

pub fn event_engine() -> Engine {
    Engine::EventDriven(EventTolerances::default())
}

pub fn discrete_engine() -> Engine {
    Engine::FullyDiscrete(DiscreteParams::default())
}

/// Random piecewise-constant datum on `[-1, 1]` with up to four pieces,
/// some of them vacuum.
pub fn random_datum<R: Rng>(rng: &mut R) -> InitialDatum {
    loop {
        let k = rng.gen_range(1..=4);
        let mut cuts: Vec<f64> = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        cuts.sort_by(f64::total_cmp);
        let pieces: Vec<Piece> = cuts
            .windows(2)
            .map(|w| {
                let value = if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                };
                Piece::new(w[0], w[1], value)
            })
            .collect();
        if let Ok(d) = InitialDatum::new(pieces, 1.0) {
            if d.mass() > 1e-3 {
                return d;
            }
        }
    }
}

/// Exact integral of the particle density over `[a, b]`, gap by gap.
pub fn overlap_integral(positions: &[f64], ell: f64, a: f64, b: f64) -> f64 {
    positions
        .windows(2)
        .map(|w| (b.min(w[1]) - a.max(w[0])).max(0.0) * ell / (w[1] - w[0]))
        .sum()
}

/// Turning point by bisection on the cost difference, built straight from
/// the definition of the two door costs.
pub fn zeta_by_bisection(positions: &[f64], ell: f64, alpha: f64) -> f64 {
    let inside: Vec<usize> = (0..positions.len())
        .filter(|&i| positions[i] > -1.0 && positions[i] < 1.0)
        .collect();
    let (first, last) = match (inside.first(), inside.last()) {
        (Some(&f), Some(&l)) => (positions[f], positions[l]),
        _ => return 0.0,
    };
    let diff = |x: f64| {
        let zm = if x > first {
            x + 1.0 + alpha * overlap_integral(positions, ell, first, x)
        } else {
            x + 1.0
        };
        let zp = if x < last {
            1.0 - x + alpha * overlap_integral(positions, ell, x, last)
        } else {
            1.0 - x
        };
        zm - zp
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if diff(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn run(engine: &Engine, init: &ParticleInit, alpha: f64, sample_every: f64) -> RunResult {
    let options = RunOptions {
        sample_every: Some(sample_every),
        sample_events: true,
        t_end: None,
    };
    run_to_evacuation(engine, init, &unit_model(), alpha, &options).unwrap()
}

/// Checks every configuration-level and trajectory-level invariant on a run.
pub fn check_invariants<R: Rng>(
    result: &RunResult,
    init: &ParticleInit,
    alpha: f64,
    rng: &mut R,
) -> Result<(), String> {
    let v_max = 1.0;
    let rho_max = 1.0;
    let ell = init.ell;
    let mass = init.mass;
    let r_max = init.r_max;

    // gap bounds at every step
    if result.min_gap < ell / r_max - TOL {
        return Err(format!("min gap {} below {}", result.min_gap, ell / r_max));
    }
    let cap = 2.0 * (v_max * result.final_time + 1.0);
    if result.max_gap > cap + TOL {
        return Err(format!("max gap {} above {cap}", result.max_gap));
    }
    if result.engine == "discrete" && result.min_gap < ell / rho_max - TOL {
        return Err(format!(
            "discrete gap {} below ell / rho_max",
            result.min_gap
        ));
    }

    for s in &result.samples {
        let gap_hi = 2.0 * (v_max * s.t + 1.0);
        for (i, w) in s.positions.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap < ell / r_max - TOL || gap > gap_hi + TOL {
                return Err(format!("gap {i} = {gap} out of bounds at t = {}", s.t));
            }
        }
        let state = turning_state(&s.positions, ell, alpha);
        if (s.zeta - state.zeta).abs() > 0.0 {
            return Err("stored turning point differs from recomputation".into());
        }
        let window_mass = overlap_integral(&s.positions, ell, -1.0, 1.0);
        if !(s.zeta > -1.0 && s.zeta < 1.0) || s.zeta.abs() > alpha * window_mass / 2.0 + 1e-12 {
            return Err(format!(
                "zeta {} outside bounds (alpha M / 2 = {}) at t = {}",
                s.zeta,
                alpha * window_mass / 2.0,
                s.t
            ));
        }
        if (s.xi - s.zeta).abs() > alpha * ell / 2.0 + 1e-12 {
            return Err(format!(
                "|xi - zeta| = {} at t = {}",
                (s.xi - s.zeta).abs(),
                s.t
            ));
        }
    }

    // time regularity over sample pairs
    let profiles: Vec<(f64, DensityProfile)> = result
        .samples
        .iter()
        .map(|s| (s.t, DensityProfile::new(&s.positions, ell)))
        .collect();
    for (i, (s, a)) in profiles.iter().enumerate() {
        for (t, b) in &profiles[i + 1..] {
            let w = wasserstein1(&a.pseudo_inverse(), &b.pseudo_inverse())
                .map_err(|e| e.to_string())?;
            let bound = 2.0 * mass * v_max * (t - s) + TOL;
            if w > bound {
                return Err(format!("W1 {w} > {bound} between t = {s} and {t}"));
            }
            let lo = rng.gen_range(-1.5..1.5);
            let hi = lo + rng.gen_range(0.0..1.0);
            let drift = windowed_mass_drift(a, b, lo, hi);
            let bound = 6.0 * v_max * r_max * (t - s) + TOL;
            if drift > bound {
                return Err(format!("mass drift {drift} > {bound} on [{lo}, {hi}]"));
            }
        }
    }

    if result.engine == "event" {
        check_event_structure(result, alpha)?;
    }
    if result.events.exits.len() != init.n() + 1 {
        return Err(format!(
            "{} exits for {} particles",
            result.events.exits.len(),
            init.n() + 1
        ));
    }
    Ok(())
}

/// Switches happen only at exits, at most one per exit, and the turning
/// point jumps away from the door that was used.
pub fn check_event_structure(result: &RunResult, alpha: f64) -> Result<(), String> {
    let exits = &result.events.exits;
    for sw in &result.events.switches {
        let at: Vec<_> = exits.iter().filter(|e| e.time == sw.time).collect();
        if at.is_empty() {
            return Err(format!("switch at t = {} without an exit", sw.time));
        }
        if at.len() > 1 {
            return Err(format!("switch at simultaneous exits, t = {}", sw.time));
        }
        let count = result
            .events
            .switches
            .iter()
            .filter(|s| s.time == sw.time)
            .count();
        if count > 1 {
            return Err(format!("{count} switches at t = {}", sw.time));
        }
    }
    for e in exits {
        let same_time = exits.iter().filter(|f| f.time == e.time).count();
        let (Some(before), Some(after)) = (e.zeta_before, e.zeta_after) else {
            continue;
        };
        if alpha == 0.0 {
            if before != 0.0 || after != 0.0 {
                return Err("turning point moved with alpha = 0".into());
            }
            continue;
        }
        let jump = after - before;
        let ok = match (same_time, e.door) {
            (1, Door::Left) => jump >= 0.0,
            (1, Door::Right) => jump <= 0.0,
            _ => jump.abs() < 1e-9,
        };
        if !ok {
            return Err(format!(
                "turning point jump {jump} after {:?} exit at t = {} ({same_time} exits)",
                e.door, e.time
            ));
        }
    }
    Ok(())
}
