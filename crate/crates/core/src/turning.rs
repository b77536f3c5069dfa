//! Turning point of the particle crowd.
//!
//! For a linear cost both sides of the cost balance are piecewise linear in
//! `x`, with kinks only at particle positions, so every root here is found by a
//! breakpoint scan followed by a single linear solve.

use serde::Serialize;

use crate::model::{DOOR_LEFT, DOOR_RIGHT};

/// Indices of the first and last particle strictly inside `(-1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CorridorWindow {
    pub first: usize,
    pub last: usize,
}

impl CorridorWindow {
    /// Particles with `-1 < x < 1`, or `None` when the corridor is empty.
    ///
    /// Positions must be sorted.
    pub fn of(positions: &[f64]) -> Option<Self> {
        let first = positions.partition_point(|&x| x <= DOOR_LEFT);
        let end = positions.partition_point(|&x| x < DOOR_RIGHT);
        (first < end).then(|| Self {
            first,
            last: end - 1,
        })
    }

    /// Number of particles in the window.
    pub fn count(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.first..=self.last).contains(&i)
    }
}

/// Cumulative mass `int_{-inf}^x rho^n` of the particle density.
///
/// Exactly `j * ell` at `x = x_j`.
pub fn cumulative_mass(positions: &[f64], ell: f64, x: f64) -> f64 {
    let n = positions.len() - 1;
    let above = positions.partition_point(|&p| p <= x);
    if above == 0 {
        return 0.0;
    }
    let j = above - 1;
    if j >= n {
        return n as f64 * ell;
    }
    let offset = x - positions[j];
    if offset == 0.0 {
        return j as f64 * ell;
    }
    j as f64 * ell + offset * ell / (positions[j + 1] - positions[j])
}

/// Travel-cost profiles to the two doors built from the particles inside the corridor.
#[derive(Clone, Debug)]
pub struct CostProfile<'a> {
    positions: &'a [f64],
    ell: f64,
    alpha: f64,
    window: Option<CorridorWindow>,
    /// `-1`, the in-window positions strictly inside the corridor, `1`.
    knots: Vec<f64>,
    z_minus: Vec<f64>,
    z_plus: Vec<f64>,
}

impl<'a> CostProfile<'a> {
    /// Profiles using the particles currently strictly inside the corridor.
    pub fn new(positions: &'a [f64], ell: f64, alpha: f64) -> Self {
        Self::with_window(positions, ell, alpha, CorridorWindow::of(positions))
    }

    /// Profiles with an explicit corridor window; used to evaluate the
    /// left limit at an exit, when the leaving particle still counts.
    pub fn with_window(
        positions: &'a [f64],
        ell: f64,
        alpha: f64,
        window: Option<CorridorWindow>,
    ) -> Self {
        let mut profile = Self {
            positions,
            ell,
            alpha,
            window,
            knots: Vec::new(),
            z_minus: Vec::new(),
            z_plus: Vec::new(),
        };
        let mut knots = vec![DOOR_LEFT];
        if let Some(w) = window {
            knots.extend(
                positions[w.first..=w.last]
                    .iter()
                    .copied()
                    .filter(|&x| DOOR_LEFT < x && x < DOOR_RIGHT),
            );
        }
        knots.push(DOOR_RIGHT);
        profile.z_minus = knots.iter().map(|&x| profile.z_minus_at(x)).collect();
        profile.z_plus = knots.iter().map(|&x| profile.z_plus_at(x)).collect();
        profile.knots = knots;
        profile
    }

    pub fn window(&self) -> Option<CorridorWindow> {
        self.window
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn positions(&self) -> &'a [f64] {
        self.positions
    }

    /// Breakpoints of both profiles on `[-1, 1]`.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn z_minus_knots(&self) -> &[f64] {
        &self.z_minus
    }

    pub fn z_plus_knots(&self) -> &[f64] {
        &self.z_plus
    }

    fn mass_to(&self, x: f64) -> f64 {
        cumulative_mass(self.positions, self.ell, x)
    }

    /// Cost of reaching the left door from `x`.
    pub fn z_minus_at(&self, x: f64) -> f64 {
        match self.window {
            Some(w) if x > self.positions[w.first] && self.alpha > 0.0 => {
                let start = w.first as f64 * self.ell;
                x + 1.0 + self.alpha * (self.mass_to(x) - start)
            }
            _ => x + 1.0,
        }
    }

    /// Cost of reaching the right door from `x`.
    pub fn z_plus_at(&self, x: f64) -> f64 {
        match self.window {
            Some(w) if x < self.positions[w.last] && self.alpha > 0.0 => {
                let end = w.last as f64 * self.ell;
                1.0 - x + self.alpha * (end - self.mass_to(x))
            }
            _ => 1.0 - x,
        }
    }

    /// Cost mismatch `Z_-(x) - Z_+(x)`, strictly increasing with slope at least 2.
    pub fn imbalance(&self, x: f64) -> f64 {
        self.z_minus_at(x) - self.z_plus_at(x)
    }

    /// Exact zero of the cost mismatch.
    pub fn root(&self) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        let diffs: Vec<f64> = self
            .z_minus
            .iter()
            .zip(&self.z_plus)
            .map(|(m, p)| m - p)
            .collect();
        root_on_knots(&self.knots, &diffs)
    }
}

/// Zero of the increasing piecewise-linear function interpolating `(xs, ds)`,
/// with `ds[0] < 0 < ds[last]`.
fn root_on_knots(xs: &[f64], ds: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ds.len());
    let k = ds.partition_point(|&d| d <= 0.0);
    if k == 0 {
        return xs[0];
    }
    if k == ds.len() || ds[k - 1] == 0.0 {
        return xs[k - 1];
    }
    let (a, b) = (xs[k - 1], xs[k]);
    let (da, db) = (ds[k - 1], ds[k]);
    (a - da * (b - a) / (db - da)).clamp(a, b)
}

/// Sharp turning point and the alternative full-corridor turning point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TurningState {
    pub zeta: f64,
    pub xi: f64,
    pub i_minus: Option<usize>,
    pub i_plus: Option<usize>,
    /// Number of particles strictly left of `zeta`; these move towards the left door.
    pub split: usize,
}

impl TurningState {
    /// Index `I_0` with `x_{I_0} < zeta <= x_{I_0 + 1}`; `None` when every
    /// particle is at or right of `zeta`.
    pub fn i_zero(&self) -> Option<usize> {
        self.split.checked_sub(1)
    }
}

/// Profiles of the two door costs for the current positions.
pub fn build_z<'a>(positions: &'a [f64], ell: f64, alpha: f64) -> CostProfile<'a> {
    CostProfile::new(positions, ell, alpha)
}

/// Solves the cost balance for the sharp turning point.
pub fn solve_zeta(profile: &CostProfile<'_>) -> TurningState {
    let positions = profile.positions();
    let zeta = profile.root();
    TurningState {
        zeta,
        xi: solve_xi(positions, profile.ell(), profile.alpha()),
        i_minus: profile.window().map(|w| w.first),
        i_plus: profile.window().map(|w| w.last),
        split: positions.partition_point(|&x| x < zeta),
    }
}

/// Turning state of a configuration in one call.
pub fn turning_state(positions: &[f64], ell: f64, alpha: f64) -> TurningState {
    solve_zeta(&build_z(positions, ell, alpha))
}

/// Turning point balancing the costs integrated over the whole corridor,
/// including the mass of gaps straddling the doors.
pub fn solve_xi(positions: &[f64], ell: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let at_left = cumulative_mass(positions, ell, DOOR_LEFT);
    let at_right = cumulative_mass(positions, ell, DOOR_RIGHT);
    let imbalance =
        |x: f64| 2.0 * x + alpha * (2.0 * cumulative_mass(positions, ell, x) - at_left - at_right);
    let mut xs = vec![DOOR_LEFT];
    xs.extend(
        positions
            .iter()
            .copied()
            .filter(|&x| DOOR_LEFT < x && x < DOOR_RIGHT),
    );
    xs.push(DOOR_RIGHT);
    let ds: Vec<f64> = xs.iter().map(|&x| imbalance(x)).collect();
    root_on_knots(&xs, &ds)
}

/// Mass in `[-1, xi)` measured in units of `ell`, assembled from particle
/// counts and the two fractional gaps cut by `-1` and `xi`.
fn counted_mass(positions: &[f64], xi: f64) -> f64 {
    let n = positions.len() - 1;
    let fraction_from = |j: Option<usize>, x: f64| -> Option<f64> {
        j.filter(|&j| j < n)
            .map(|j| (x - positions[j]) / (positions[j + 1] - positions[j]))
    };
    let below_xi = positions.partition_point(|&x| x < xi);
    let below_door = positions.partition_point(|&x| x < DOOR_LEFT);
    let inside = below_xi.saturating_sub(below_door);
    // gap containing xi, and the part of the door-straddling gap right of -1
    let cut_xi = fraction_from(below_xi.checked_sub(1), xi);
    let cut_door = below_door
        .checked_sub(1)
        .filter(|&j| j < n)
        .map(|j| (positions[j + 1] - DOOR_LEFT) / (positions[j + 1] - positions[j]));
    if inside == 0 {
        // xi and -1 share a gap, or no mass lies between them
        return match (cut_xi, cut_door) {
            (Some(a), Some(b)) => a + b - 1.0,
            _ => 0.0,
        };
    }
    (inside - 1) as f64 + cut_xi.unwrap_or(0.0) + cut_door.unwrap_or(0.0)
}

/// Turning point from the counting form of the full-corridor balance,
/// solved numerically by bisection on `[-1, 1]`.
///
/// Cheaper to evaluate pointwise than the profile construction and meant for
/// plotting; agrees with [`solve_xi`] up to floating-point effects.
pub fn solve_xi_discrete(positions: &[f64], ell: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let target = 0.5 * alpha * counted_mass(positions, DOOR_RIGHT);
    let residual = |xi: f64| xi / ell + alpha * counted_mass(positions, xi) - target;
    let (mut lo, mut hi) = (DOOR_LEFT, DOOR_RIGHT);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
