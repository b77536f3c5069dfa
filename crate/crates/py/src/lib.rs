//! Python module `hughes`: atomization, turning points and full runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rayon::prelude::*;

use hughes_core::dynamics::{DiscreteParams, EventTolerances, RunOptions};
use hughes_core::{self as core, Engine, Error, InitialDatum, Piece};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::DensityOutOfRange { .. }
        | Error::InvalidModel(_)
        | Error::InvalidDatum(_)
        | Error::ZeroMass
        | Error::SpacingUnderflow { .. }
        | Error::CflViolation { .. }
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Affine speed law `v(rho) = v_max (1 - rho / rho_max)`.
#[pyclass(name = "VelocityModel", module = "hughes", frozen)]
struct PyVelocityModel {
    inner: core::VelocityModel,
}

#[pymethods]
impl PyVelocityModel {
    #[new]
    #[pyo3(signature = (v_max = 1.0, rho_max = 1.0))]
    fn new(v_max: f64, rho_max: f64) -> PyResult<Self> {
        Ok(Self {
            inner: core::VelocityModel::affine(v_max, rho_max).map_err(to_py)?,
        })
    }

    #[getter]
    fn v_max(&self) -> f64 {
        self.inner.v_max()
    }

    #[getter]
    fn rho_max(&self) -> f64 {
        self.inner.rho_max()
    }

    fn v(&self, rho: f64) -> PyResult<f64> {
        self.inner.eval_v(rho).map_err(to_py)
    }

    fn flux(&self, rho: f64) -> PyResult<f64> {
        self.inner.flux(rho).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "VelocityModel(v_max={}, rho_max={})",
            self.inner.v_max(),
            self.inner.rho_max()
        )
    }
}

/// Piecewise-constant initial density given as `(a, b, value)` triples.
#[pyclass(name = "Datum", module = "hughes", frozen)]
struct PyDatum {
    inner: InitialDatum,
}

#[pymethods]
impl PyDatum {
    #[new]
    #[pyo3(signature = (pieces, rho_max = 1.0))]
    fn new(pieces: Vec<(f64, f64, f64)>, rho_max: f64) -> PyResult<Self> {
        let inner = InitialDatum::new(
            pieces.into_iter().map(|(a, b, v)| Piece::new(a, b, v)),
            rho_max,
        )
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn total_variation(&self) -> f64 {
        self.inner.total_variation()
    }

    fn density_at(&self, x: f64) -> f64 {
        self.inner.density_at(x)
    }

    /// Equal-mass particle positions; returns `(positions, ell)`.
    fn atomize(&self, n: usize) -> PyResult<(Vec<f64>, f64)> {
        let init = self.inner.atomize(n).map_err(to_py)?;
        Ok((init.positions, init.ell))
    }
}

/// Turning point and the number of left movers for a configuration.
#[pyfunction]
fn solve_zeta<'py>(
    py: Python<'py>,
    positions: Vec<f64>,
    ell: f64,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    check_positions(&positions)?;
    let state = core::turning::turning_state(&positions, ell, alpha);
    let d = PyDict::new(py);
    d.set_item("zeta", state.zeta)?;
    d.set_item("xi", state.xi)?;
    d.set_item("split", state.split)?;
    Ok(d)
}

#[pyfunction]
fn solve_xi(positions: Vec<f64>, ell: f64, alpha: f64) -> PyResult<f64> {
    check_positions(&positions)?;
    Ok(core::solve_xi(&positions, ell, alpha))
}

#[pyfunction]
fn solve_xi_discrete(positions: Vec<f64>, ell: f64, alpha: f64) -> PyResult<f64> {
    check_positions(&positions)?;
    Ok(core::solve_xi_discrete(&positions, ell, alpha))
}

fn check_positions(positions: &[f64]) -> PyResult<()> {
    if positions.len() < 2 || positions.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PyValueError::new_err(
            "positions must be strictly increasing with at least two entries",
        ));
    }
    Ok(())
}

fn engine(name: &str, dt: Option<f64>, allow_cfl_violation: bool) -> PyResult<Engine> {
    match name {
        "event" => Ok(Engine::EventDriven(EventTolerances::default())),
        "discrete" => Ok(Engine::FullyDiscrete(DiscreteParams {
            dt,
            allow_cfl_violation,
        })),
        other => Err(PyValueError::new_err(format!(
            "engine must be 'event' or 'discrete', got {other:?}"
        ))),
    }
}

/// Runs to evacuation. Returns a dict with the evacuation time, exit and
/// switch events, and sampled positions.
#[pyfunction]
#[pyo3(signature = (datum, n, alpha, engine = "discrete", model = None, dt = None,
                    allow_cfl_violation = false, sample_every = None, t_end = None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    datum: &PyDatum,
    n: usize,
    alpha: f64,
    engine: &str,
    model: Option<&PyVelocityModel>,
    dt: Option<f64>,
    allow_cfl_violation: bool,
    sample_every: Option<f64>,
    t_end: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let model = match model {
        Some(m) => m.inner.clone(),
        None => core::VelocityModel::affine(1.0, 1.0).map_err(to_py)?,
    };
    let engine = self::engine(engine, dt, allow_cfl_violation)?;
    let init = datum.inner.atomize(n).map_err(to_py)?;
    let options = RunOptions {
        sample_every,
        sample_events: false,
        t_end,
    };
    let result = py
        .detach(|| core::run_to_evacuation(&engine, &init, &model, alpha, &options))
        .map_err(to_py)?;

    let d = PyDict::new(py);
    d.set_item("engine", result.engine)?;
    d.set_item("ell", result.ell)?;
    d.set_item("evacuation_time", result.evacuation_time)?;
    d.set_item("final_time", result.final_time)?;
    d.set_item("steps", result.steps)?;
    let exits: Vec<(f64, usize, &str)> = result
        .events
        .exits
        .iter()
        .map(|e| {
            let door = match e.door {
                core::Door::Left => "left",
                core::Door::Right => "right",
            };
            (e.time, e.particle, door)
        })
        .collect();
    d.set_item("exits", exits)?;
    let switches: Vec<(f64, usize)> = result
        .events
        .switches
        .iter()
        .map(|s| (s.time, s.particle))
        .collect();
    d.set_item("switches", switches)?;
    let times: Vec<f64> = result.samples.iter().map(|s| s.t).collect();
    let positions: Vec<Vec<f64>> = result.samples.into_iter().map(|s| s.positions).collect();
    d.set_item("times", times)?;
    d.set_item("positions", positions)?;
    Ok(d)
}

/// Evacuation time for each alpha, computed in parallel.
#[pyfunction]
#[pyo3(signature = (datum, n, alphas, engine = "discrete", model = None))]
fn sweep(
    py: Python<'_>,
    datum: &PyDatum,
    n: usize,
    alphas: Vec<f64>,
    engine: &str,
    model: Option<&PyVelocityModel>,
) -> PyResult<Vec<f64>> {
    let model = match model {
        Some(m) => m.inner.clone(),
        None => core::VelocityModel::affine(1.0, 1.0).map_err(to_py)?,
    };
    let engine = self::engine(engine, None, false)?;
    let init = datum.inner.atomize(n).map_err(to_py)?;
    let options = RunOptions::default();
    py.detach(|| {
        alphas
            .par_iter()
            .map(|&alpha| {
                let r = core::run_to_evacuation(&engine, &init, &model, alpha, &options)?;
                r.evacuation_time
                    .ok_or(Error::Timeout { cap: r.final_time })
            })
            .collect::<Result<Vec<f64>, Error>>()
    })
    .map_err(to_py)
}

#[pymodule]
fn hughes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVelocityModel>()?;
    m.add_class::<PyDatum>()?;
    m.add_function(wrap_pyfunction!(solve_zeta, m)?)?;
    m.add_function(wrap_pyfunction!(solve_xi, m)?)?;
    m.add_function(wrap_pyfunction!(solve_xi_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
