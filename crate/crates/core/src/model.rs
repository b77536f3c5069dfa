//! Velocity, flux and cost maps of the corridor model.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Left door of the corridor.
pub const DOOR_LEFT: f64 = -1.0;
/// Right door of the corridor.
pub const DOOR_RIGHT: f64 = 1.0;

/// Default resolution of the finite-difference assumption checks.
pub const DEFAULT_CHECK_POINTS: usize = 1001;
/// Tolerance applied to the sign conditions of the assumption checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Shape of the speed-density relation.
#[derive(Clone)]
pub enum VelocityKind {
    /// `v(rho) = v_max (1 - rho / rho_max)`.
    Affine,
    /// Closed-form speed law supplied by the caller.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Speeds tabulated on a uniform grid of `[0, rho_max]`, linearly interpolated.
    Tabulated(Vec<f64>),
}

impl fmt::Debug for VelocityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityKind::Affine => f.write_str("Affine"),
            VelocityKind::Custom(_) => f.write_str("Custom(..)"),
            VelocityKind::Tabulated(t) => write!(f, "Tabulated({} nodes)", t.len()),
        }
    }
}

/// Pedestrian speed as a function of density, together with the flux `f = rho v(rho)`.
#[derive(Clone, Debug)]
pub struct VelocityModel {
    v_max: f64,
    rho_max: f64,
    kind: VelocityKind,
}

impl VelocityModel {
    pub fn affine(v_max: f64, rho_max: f64) -> Result<Self> {
        check_scales(v_max, rho_max)?;
        Ok(Self {
            v_max,
            rho_max,
            kind: VelocityKind::Affine,
        })
    }

    /// A closed-form speed law. The endpoint values must match `v(0) = v_max`
    /// and `v(rho_max) = 0`.
    pub fn custom<F>(v_max: f64, rho_max: f64, v: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_scales(v_max, rho_max)?;
        let model = Self {
            v_max,
            rho_max,
            kind: VelocityKind::Custom(Arc::new(v)),
        };
        model.check_endpoints()?;
        Ok(model)
    }

    pub fn tabulated(rho_max: f64, speeds: Vec<f64>) -> Result<Self> {
        if speeds.len() < 2 {
            return Err(Error::InvalidModel(
                "a tabulated speed law needs at least two nodes".into(),
            ));
        }
        let v_max = speeds[0];
        check_scales(v_max, rho_max)?;
        let model = Self {
            v_max,
            rho_max,
            kind: VelocityKind::Tabulated(speeds),
        };
        model.check_endpoints()?;
        Ok(model)
    }

    fn check_endpoints(&self) -> Result<()> {
        let at_zero = self.eval_raw(0.0);
        let at_max = self.eval_raw(self.rho_max);
        if (at_zero - self.v_max).abs() > 1e-12 * self.v_max.max(1.0) {
            return Err(Error::InvalidModel(format!(
                "v(0) = {at_zero} differs from v_max = {}",
                self.v_max
            )));
        }
        if at_max.abs() > 1e-12 * self.v_max.max(1.0) {
            return Err(Error::InvalidModel(format!(
                "v(rho_max) = {at_max} is not zero"
            )));
        }
        Ok(())
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn kind(&self) -> &VelocityKind {
        &self.kind
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, VelocityKind::Affine)
    }

    fn eval_raw(&self, rho: f64) -> f64 {
        match &self.kind {
            VelocityKind::Affine => self.v_max * (1.0 - rho / self.rho_max),
            VelocityKind::Custom(v) => v(rho),
            VelocityKind::Tabulated(table) => {
                let cells = (table.len() - 1) as f64;
                let s = (rho / self.rho_max * cells).clamp(0.0, cells);
                let k = (s.floor() as usize).min(table.len() - 2);
                let w = s - k as f64;
                table[k] * (1.0 - w) + table[k + 1] * w
            }
        }
    }

    /// Speed at density `rho`; defined on `[0, rho_max]` only.
    pub fn eval_v(&self, rho: f64) -> Result<f64> {
        if !(0.0..=self.rho_max).contains(&rho) {
            return Err(Error::DensityOutOfRange {
                rho,
                rho_max: self.rho_max,
            });
        }
        Ok(self.eval_raw(rho))
    }

    /// `max(v(rho), 0)`, extended by zero above `rho_max`.
    #[inline]
    pub fn eval_v_plus(&self, rho: f64) -> f64 {
        if rho >= self.rho_max {
            return 0.0;
        }
        self.eval_raw(rho.max(0.0)).max(0.0)
    }

    pub fn flux(&self, rho: f64) -> Result<f64> {
        Ok(rho * self.eval_v(rho)?)
    }

    /// Density maximising the flux.
    pub fn critical_density(&self) -> f64 {
        if self.is_affine() {
            return 0.5 * self.rho_max;
        }
        let h = self.rho_max / (DEFAULT_CHECK_POINTS - 1) as f64;
        (0..DEFAULT_CHECK_POINTS)
            .map(|k| k as f64 * h)
            .map(|rho| (rho, rho * self.eval_raw(rho)))
            .fold((0.0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
            .0
    }

    /// Finite-difference check of the structural assumptions on `v` over a
    /// uniform grid of `[0, rho_max]`.
    pub fn validate_assumptions(&self, grid_points: usize) -> Result<AssumptionReport> {
        if grid_points < 3 {
            return Err(Error::InvalidModel(format!(
                "assumption checks need at least 3 grid points, got {grid_points}"
            )));
        }
        let h = self.rho_max / (grid_points - 1) as f64;
        let rho: Vec<f64> = (0..grid_points).map(|k| k as f64 * h).collect();
        let v: Vec<f64> = rho.iter().map(|&r| self.eval_raw(r)).collect();
        let f: Vec<f64> = rho.iter().zip(&v).map(|(r, v)| r * v).collect();

        // strictly decreasing speed
        let mut decreasing = SignCheck::new();
        for k in 0..grid_points - 1 {
            decreasing.record(v[k + 1] - v[k], rho[k], |d| d < -CHECK_TOLERANCE);
        }

        // strictly concave flux
        let mut concave = SignCheck::new();
        for k in 1..grid_points - 1 {
            let d2 = f[k - 1] - 2.0 * f[k] + f[k + 1];
            concave.record(d2, rho[k], |d| d < -CHECK_TOLERANCE);
        }

        // rho * v'(rho) non-increasing
        let slope = |k: usize| -> f64 {
            if k == 0 {
                (v[1] - v[0]) / h
            } else if k == grid_points - 1 {
                (v[k] - v[k - 1]) / h
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * h)
            }
        };
        let g: Vec<f64> = (0..grid_points).map(|k| rho[k] * slope(k)).collect();
        let mut v_prime = SignCheck::new();
        for k in 0..grid_points - 1 {
            v_prime.record(g[k + 1] - g[k], rho[k], |d| d <= CHECK_TOLERANCE);
        }

        Ok(AssumptionReport {
            grid_points,
            speed_decreasing: decreasing.finish(),
            flux_concave: concave.finish(),
            rho_v_prime_nonincreasing: v_prime.finish(),
        })
    }
}

fn check_scales(v_max: f64, rho_max: f64) -> Result<()> {
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(Error::InvalidModel(format!(
            "v_max must be positive, got {v_max}"
        )));
    }
    if !(rho_max.is_finite() && rho_max > 0.0) {
        return Err(Error::InvalidModel(format!(
            "rho_max must be positive, got {rho_max}"
        )));
    }
    Ok(())
}

/// Outcome of one sign condition evaluated on the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub failures: usize,
    /// Least favourable finite difference seen on the grid.
    pub worst_value: f64,
    pub worst_at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub grid_points: usize,
    pub speed_decreasing: CheckOutcome,
    pub flux_concave: CheckOutcome,
    pub rho_v_prime_nonincreasing: CheckOutcome,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.speed_decreasing.passed
            && self.flux_concave.passed
            && self.rho_v_prime_nonincreasing.passed
    }
}

struct SignCheck {
    failures: usize,
    worst_value: f64,
    worst_at: f64,
}

impl SignCheck {
    fn new() -> Self {
        Self {
            failures: 0,
            worst_value: f64::NEG_INFINITY,
            worst_at: 0.0,
        }
    }

    fn record(&mut self, value: f64, at: f64, ok: impl Fn(f64) -> bool) {
        if !ok(value) {
            self.failures += 1;
        }
        if value > self.worst_value {
            self.worst_value = value;
            self.worst_at = at;
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            passed: self.failures == 0,
            failures: self.failures,
            worst_value: self.worst_value,
            worst_at: self.worst_at,
        }
    }
}

/// Linear running cost `c(rho) = 1 + alpha rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostModel {
    alpha: f64,
}

impl CostModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "cost slope must be finite and non-negative, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cost(&self, rho: f64) -> f64 {
        1.0 + self.alpha * rho
    }
}

/// Speed law and cost on the corridor `(-1, 1)`.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub velocity: VelocityModel,
    pub cost: CostModel,
}

impl ModelConfig {
    pub fn new(velocity: VelocityModel, cost: CostModel) -> Self {
        Self { velocity, cost }
    }

    pub fn corridor(&self) -> (f64, f64) {
        (DOOR_LEFT, DOOR_RIGHT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_speed_values() {
        let m = VelocityModel::affine(1.0, 1.0).unwrap();
        assert_eq!(m.eval_v(0.0).unwrap(), 1.0);
        assert_eq!(m.eval_v(1.0).unwrap(), 0.0);
        assert!((m.eval_v(0.9).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn speed_outside_domain_is_an_error() {
        let m = VelocityModel::affine(1.0, 1.0).unwrap();
        assert!(matches!(
            m.eval_v(1.2),
            Err(Error::DensityOutOfRange { .. })
        ));
        assert!(m.eval_v(-0.1).is_err());
    }

    #[test]
    fn positive_part_of_speed() {
        let m = VelocityModel::affine(1.0, 1.0).unwrap();
        assert_eq!(m.eval_v_plus(1.2), 0.0);
        assert_eq!(m.eval_v_plus(0.5), 0.5);
        assert_eq!(m.eval_v_plus(1.0), 0.0);
        for k in 0..=100 {
            let rho = k as f64 / 100.0;
            assert_eq!(m.eval_v_plus(rho), m.eval_v(rho).unwrap());
        }
    }

    #[test]
    fn affine_passes_assumption_checks() {
        let m = VelocityModel::affine(1.0, 1.0).unwrap();
        assert!(m.validate_assumptions(101).unwrap().all_passed());
        assert!(m
            .validate_assumptions(DEFAULT_CHECK_POINTS)
            .unwrap()
            .all_passed());
        let m = VelocityModel::affine(2.0, 3.0).unwrap();
        assert!(m.validate_assumptions(11).unwrap().all_passed());
        assert!(m.validate_assumptions(2).is_err());
    }

    #[test]
    fn quadratic_speed_law_report() {
        // v = 1 - rho^2: f = rho - rho^3 has f'' = -6 rho, which vanishes only at
        // rho = 0; the centred second differences are -6 h^2 rho_k < 0 on the
        // interior nodes, and rho v' = -2 rho^2 is decreasing.
        let m = VelocityModel::custom(1.0, 1.0, |r| 1.0 - r * r).unwrap();
        let report = m.validate_assumptions(101).unwrap();
        let h: f64 = 0.01;
        let expected_worst_d2 = -6.0 * h.powi(3);
        assert!(report.speed_decreasing.passed);
        assert!(report.flux_concave.passed);
        assert!((report.flux_concave.worst_value - expected_worst_d2).abs() < 1e-12);
        assert!(report.rho_v_prime_nonincreasing.passed);
    }

    #[test]
    fn non_concave_flux_is_reported() {
        // v = (1 - rho)^3 gives f'' = 6 (1 - rho)(2 rho - 1), positive for rho > 1/2.
        let m = VelocityModel::custom(1.0, 1.0, |r| (1.0 - r).powi(3)).unwrap();
        let report = m.validate_assumptions(101).unwrap();
        assert!(report.speed_decreasing.passed);
        assert!(!report.flux_concave.passed);
        assert!(report.flux_concave.worst_at > 0.5);
    }

    #[test]
    fn critical_density() {
        let m = VelocityModel::affine(1.0, 2.0).unwrap();
        assert_eq!(m.critical_density(), 1.0);
        let c = VelocityModel::custom(1.0, 2.0, |r| 1.0 - r / 2.0).unwrap();
        assert!((c.critical_density() - 1.0).abs() <= 2.0 / 1000.0);
    }

    #[test]
    fn custom_endpoints_are_checked() {
        assert!(VelocityModel::custom(1.0, 1.0, |r| 2.0 - r).is_err());
        assert!(VelocityModel::custom(1.0, 1.0, |r| 1.0 - 0.5 * r).is_err());
        let t = VelocityModel::tabulated(1.0, vec![1.0, 0.5, 0.0]).unwrap();
        assert!((t.eval_v(0.25).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cost_is_at_least_one() {
        let c = CostModel::new(1.3).unwrap();
        assert_eq!(c.cost(0.0), 1.0);
        assert!((c.cost(1.0) - 2.3).abs() < 1e-15);
        assert!(CostModel::new(-1.0).is_err());
    }
}
