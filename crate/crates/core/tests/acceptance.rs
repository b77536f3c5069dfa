//! Acceptance suite. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use common::*;
use hughes_core::dynamics::{cfl_bound, RunOptions};
use hughes_core::experiments::{self, Config, EngineKind};
use hughes_core::observables::l1_between;
use hughes_core::turning::{build_z, solve_zeta};
use hughes_core::{run_to_evacuation, DensityProfile, InitialDatum, Piece};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn reference_datum() -> InitialDatum {
    InitialDatum::new(
        [Piece::new(-1.0, -0.5, 0.9), Piece::new(-0.4, 0.0, 0.9)],
        1.0,
    )
    .unwrap()
}

fn setup_values() -> Outcome {
    let init = reference_datum().atomize(200).map_err(|e| e.to_string())?;
    let dt = cfl_bound(init.mass, &unit_model(), 200);
    let detail = format!("ell = {:.17}, dt = {:.17}", init.ell, dt);
    if (init.ell - 0.00405).abs() <= 1e-15 && (dt - 0.00405).abs() <= 1e-15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn evacuation_point() -> Outcome {
    let init = reference_datum().atomize(200).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let r = run_to_evacuation(
        &discrete_engine(),
        &init,
        &unit_model(),
        1.3,
        &RunOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let t = r.evacuation_time.ok_or("no evacuation")?;
    let detail = format!(
        "T = {t:.6} ({} steps) vs 2.39355 +- 5e-3, {:.2?}",
        r.steps,
        started.elapsed()
    );
    if (t - 2.39355).abs() <= 5e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sweep_shape() -> Outcome {
    let cfg = Config::default();
    let started = Instant::now();
    let report = experiments::sweep(&cfg).map_err(|e| e.to_string())?;
    let biggest = report
        .jumps
        .iter()
        .map(|j| j.delta.abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "{} values, minimum {:.6} at alpha = {}, {} jumps (largest {biggest:.4}), {:.2?}",
        report.points.len(),
        report.min_time,
        report.argmin_alpha,
        report.jumps.len(),
        started.elapsed()
    );
    if report.points.len() == 201 && (1.2..=1.4).contains(&report.argmin_alpha) && biggest > 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn invariant_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut runs = 0;
    for k in 0..48 {
        let datum = random_datum(&mut rng);
        let n = rng.gen_range(4..=64);
        let alpha = rng.gen_range(0.0..6.0);
        let init = datum.atomize(n).map_err(|e| e.to_string())?;
        for engine in [event_engine(), discrete_engine()] {
            let r = run(&engine, &init, alpha, 0.1);
            check_invariants(&r, &init, alpha, &mut rng)
                .map_err(|m| format!("case {k} ({}, n = {n}, alpha = {alpha}): {m}", r.engine))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, all invariants hold"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ac1e);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=40);
        let mut x: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.3..1.3)).collect();
        x.sort_by(f64::total_cmp);
        x.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        if x.len() < 2 {
            continue;
        }
        let ell = rng.gen_range(1e-3..0.1);
        let alpha = rng.gen_range(0.0..10.0);
        let zeta = solve_zeta(&build_z(&x, ell, alpha)).zeta;
        worst = worst.max((zeta - zeta_by_bisection(&x, ell, alpha)).abs());
    }
    if worst > 1e-10 {
        return Err(format!("turning point off by {worst:e}"));
    }

    let fixtures = [
        vec![Piece::new(-0.5, 0.5, 0.8)],
        vec![Piece::new(-0.9, 0.9, 0.3)],
        vec![Piece::new(-0.8, -0.3, 0.6), Piece::new(0.3, 0.8, 0.6)],
        vec![
            Piece::new(-0.7, -0.2, 0.9),
            Piece::new(-0.2, 0.2, 0.4),
            Piece::new(0.2, 0.7, 0.9),
        ],
    ];
    let mut widest: f64 = 0.0;
    let mut cases = 0;
    for pieces in fixtures {
        let datum = InitialDatum::new(pieces, 1.0).map_err(|e| e.to_string())?;
        for n in [2, 4, 8, 12, 16] {
            let init = datum.atomize(n).map_err(|e| e.to_string())?;
            let dt = cfl_bound(init.mass, &unit_model(), n);
            for alpha in [0.0, 0.5, 1.0, 2.5] {
                let te = run(&event_engine(), &init, alpha, 10.0)
                    .evacuation_time
                    .unwrap();
                let td = run(&discrete_engine(), &init, alpha, 10.0)
                    .evacuation_time
                    .unwrap();
                let gap = (te - td).abs() / dt;
                widest = widest.max(gap);
                cases += 1;
                if gap > 2.0 {
                    return Err(format!(
                        "n = {n}, alpha = {alpha}: event {te} vs discrete {td} ({gap:.2} dt)"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "zeta within {worst:.1e} of bisection on 1000 configurations; \
         {cases} symmetric runs agree within {widest:.2} dt"
    ))
}

fn convergence() -> Outcome {
    let mut cfg = Config::default();
    cfg.run.engine = EngineKind::Event;
    let started = Instant::now();
    let points = experiments::convergence(&cfg).map_err(|e| e.to_string())?;
    let errors: Vec<f64> = points.iter().map(|p| p.l1_error).collect();
    let detail = format!(
        "L1 errors {:?} for n = {:?}, {:.2?}",
        errors.iter().map(|e| format!("{e:.5}")).collect::<Vec<_>>(),
        points.iter().map(|p| p.n).collect::<Vec<_>>(),
        started.elapsed()
    );
    let expected_n = [25, 50, 100, 200];
    if points.iter().map(|p| p.n).eq(expected_n) && errors.windows(2).all(|w| w[1] < w[0]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Separated crowd: support outside `[-alpha L / 2, alpha L / 2]`.
fn separated_datum(scale: f64) -> InitialDatum {
    InitialDatum::new(
        [
            Piece::new(-0.9, -0.6, 0.5 * scale),
            Piece::new(0.5, 0.8, 0.8 * scale),
        ],
        1.0,
    )
    .unwrap()
}

fn symmetric_datum() -> InitialDatum {
    InitialDatum::new(
        [
            Piece::new(-0.8, -0.3, 0.6),
            Piece::new(-0.1, 0.1, 0.9),
            Piece::new(0.3, 0.8, 0.6),
        ],
        1.0,
    )
    .unwrap()
}

fn non_interacting() -> Outcome {
    let mut checked = 0;
    let separated = separated_datum(1.0);
    let alpha_sep = 1.0;
    let half = alpha_sep * separated.mass() / 2.0;
    let (lo, hi) = separated.support();
    let inner_gap = separated.pieces()[0].b..separated.pieces()[1].a;
    if !(lo < -half && inner_gap.start < -half && inner_gap.end > half && hi > half) {
        return Err("separated fixture does not keep clear of the centre".into());
    }
    for (datum, alpha) in [(separated, alpha_sep), (symmetric_datum(), 2.0)] {
        let bound = datum.total_variation() + 2.0 * datum.r_max();
        for engine in [event_engine(), discrete_engine()] {
            let init = datum.atomize(100).map_err(|e| e.to_string())?;
            let r = run(&engine, &init, alpha, 0.05);
            if !r.events.switches.is_empty() {
                return Err(format!(
                    "{} switches ({})",
                    r.events.switches.len(),
                    r.engine
                ));
            }
            for s in &r.samples {
                let tv = DensityProfile::new(&s.positions, init.ell).total_variation();
                if tv > bound + 1e-10 {
                    return Err(format!("TV {tv} > {bound} at t = {} ({})", s.t, r.engine));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("no switches, TV bound holds at {checked} samples"))
}

fn stability_trend() -> Outcome {
    let base = separated_datum(1.0);
    let t = 0.5;
    let options = RunOptions {
        t_end: Some(t),
        ..RunOptions::default()
    };
    let profile_at = |datum: &InitialDatum, alpha: f64| -> Result<DensityProfile, String> {
        let init = datum.atomize(200).map_err(|e| e.to_string())?;
        let r = run_to_evacuation(&event_engine(), &init, &unit_model(), alpha, &options)
            .map_err(|e| e.to_string())?;
        let last = r.samples.last().ok_or("no samples")?;
        Ok(DensityProfile::new(&last.positions, init.ell))
    };
    let reference = profile_at(&base, 1.0)?;
    let mut distances = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let perturbed = profile_at(&separated_datum(1.0 - eps), 1.0 + eps)?;
        distances.push(l1_between(&reference, &perturbed));
    }
    let detail = format!("L1 at t = 0.5 over the ladder: {distances:.5?}");
    if distances.windows(2).all(|w| w[1] < w[0]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 reference setup: gap mass and CFL step", setup_values),
        ("2 evacuation time at alpha = 1.3", evacuation_point),
        ("3 alpha sweep: minimum location and jumps", sweep_shape),
        ("4 invariants on random data, both engines", invariant_suite),
        (
            "5 turning-point oracle and engine agreement",
            oracle_equivalence,
        ),
        ("6 convergence to the exact block solution", convergence),
        (
            "7 non-interacting crowds: no switches, TV bound",
            non_interacting,
        ),
        ("7b stability trend under perturbation", stability_trend),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS [{name}] {detail}"),
            Err(detail) => {
                println!("FAIL [{name}] {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
