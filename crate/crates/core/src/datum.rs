//! Piecewise-constant initial densities and their equal-mass particle atomization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DOOR_LEFT, DOOR_RIGHT};

/// Smallest admissible initial spacing between neighbouring particles.
pub const MIN_SPACING: f64 = 1e-14;

/// Constant density `value` on the half-open interval `[a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

impl Piece {
    pub fn new(a: f64, b: f64, value: f64) -> Self {
        Self { a, b, value }
    }

    pub fn mass(&self) -> f64 {
        (self.b - self.a) * self.value
    }
}

/// Initial crowd density: a finite sum of constant pieces inside the corridor.
///
/// Zero-valued and empty pieces are dropped on construction, so the stored
/// list is canonical: sorted, disjoint, every piece carrying positive mass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitialDatum {
    pieces: Vec<Piece>,
    mass: f64,
    r_max: f64,
}

impl InitialDatum {
    pub fn new(pieces: impl IntoIterator<Item = Piece>, rho_max: f64) -> Result<Self> {
        let mut pieces: Vec<Piece> = pieces.into_iter().collect();
        for p in &pieces {
            if !(p.a.is_finite() && p.b.is_finite() && p.value.is_finite()) {
                return Err(Error::InvalidDatum(format!("non-finite piece {p:?}")));
            }
            if p.a > p.b {
                return Err(Error::InvalidDatum(format!("reversed interval {p:?}")));
            }
            if p.a < DOOR_LEFT || p.b > DOOR_RIGHT {
                return Err(Error::InvalidDatum(format!(
                    "piece {p:?} leaves the corridor [-1, 1]"
                )));
            }
            if p.value < 0.0 || p.value > rho_max {
                return Err(Error::InvalidDatum(format!(
                    "density {} of piece {p:?} outside [0, {rho_max}]",
                    p.value
                )));
            }
        }
        pieces.retain(|p| p.value > 0.0 && p.b > p.a);
        pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
        for w in pieces.windows(2) {
            if w[1].a < w[0].b {
                return Err(Error::InvalidDatum(format!(
                    "pieces {:?} and {:?} overlap",
                    w[0], w[1]
                )));
            }
        }
        let mass: f64 = pieces.iter().map(Piece::mass).sum();
        if pieces.is_empty() || mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let r_max = pieces.iter().map(|p| p.value).fold(0.0, f64::max);
        Ok(Self {
            pieces,
            mass,
            r_max,
        })
    }

    /// Constant density `value` on `[a, b)`.
    pub fn block(a: f64, b: f64, value: f64, rho_max: f64) -> Result<Self> {
        Self::new([Piece::new(a, b, value)], rho_max)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Total mass `L`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Essential supremum of the density.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Convex hull of the support.
    pub fn support(&self) -> (f64, f64) {
        (self.pieces[0].a, self.pieces[self.pieces.len() - 1].b)
    }

    /// Exact integral of the density over `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.pieces
            .iter()
            .map(|p| {
                let lo = p.a.max(a);
                let hi = p.b.min(b);
                if hi > lo {
                    (hi - lo) * p.value
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.a <= x && x < p.b)
            .map_or(0.0, |p| p.value)
    }

    /// Total variation on the real line (jumps to zero at the support edges included).
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        let mut prev_value = 0.0;
        let mut prev_end = f64::NEG_INFINITY;
        for p in &self.pieces {
            if p.a > prev_end {
                // vacuum between the previous piece and this one
                tv += prev_value;
                prev_value = 0.0;
            }
            tv += (p.value - prev_value).abs();
            prev_value = p.value;
            prev_end = p.b;
        }
        tv + prev_value
    }

    /// Whether `rho(x) = rho(-x)` holds piecewise.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let k = self.pieces.len();
        (0..k).all(|j| {
            let p = self.pieces[j];
            let q = self.pieces[k - 1 - j];
            (p.a + q.b).abs() <= tol && (p.b + q.a).abs() <= tol && (p.value - q.value).abs() <= tol
        })
    }

    /// Split the datum into `n` gaps of equal mass.
    pub fn atomize(&self, n: usize) -> Result<ParticleInit> {
        atomize(self, n)
    }
}

/// Initial particle positions `x_0 < ... < x_n`, each gap carrying mass `ell`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticleInit {
    pub positions: Vec<f64>,
    pub ell: f64,
    pub mass: f64,
    /// Largest initial gap density `ell / (x_{i+1} - x_i)`.
    pub r_max: f64,
}

impl ParticleInit {
    /// Builds an initial configuration directly from positions.
    pub fn from_positions(positions: Vec<f64>, ell: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidDatum("need at least two particles".into()));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidDatum(format!(
                "gap mass must be positive, got {ell}"
            )));
        }
        let mut min_gap = f64::INFINITY;
        for (i, w) in positions.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                return Err(Error::InvalidDatum(format!(
                    "positions not strictly increasing at index {i}"
                )));
            }
            min_gap = min_gap.min(gap);
        }
        let n = positions.len() - 1;
        Ok(Self {
            mass: ell * n as f64,
            r_max: ell / min_gap,
            positions,
            ell,
        })
    }

    /// Number of gaps.
    pub fn n(&self) -> usize {
        self.positions.len() - 1
    }
}

/// Equal-mass partition of a piecewise-constant datum.
///
/// The `i`-th position is the smallest `x` at which the cumulative mass reaches
/// `i L / n`. When that level is met exactly at the left edge of a vacuum gap the
/// particle sits at that edge: past it the cumulative mass no longer grows, so the
/// set `{x : mass(x_{i-1}, x) < ell}` ends there.
pub fn atomize(datum: &InitialDatum, n: usize) -> Result<ParticleInit> {
    if n == 0 {
        return Err(Error::InvalidDatum(
            "particle count n must be at least 1".into(),
        ));
    }
    let mass = datum.mass();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let ell = mass / n as f64;
    let min_spacing = ell / datum.r_max();
    if !(min_spacing >= MIN_SPACING) {
        return Err(Error::SpacingUnderflow {
            spacing: min_spacing,
        });
    }
    let (x_min, x_max) = datum.support();
    let pieces = datum.pieces();

    // cumulative mass at the left edge of each piece
    let mut before = Vec::with_capacity(pieces.len());
    let mut acc = 0.0;
    for p in pieces {
        before.push(acc);
        acc += p.mass();
    }

    let mut positions = Vec::with_capacity(n + 1);
    positions.push(x_min);
    let mut k = 0;
    for i in 1..n {
        let target = mass * i as f64 / n as f64;
        while k + 1 < pieces.len() && before[k] + pieces[k].mass() < target {
            k += 1;
        }
        let p = pieces[k];
        let x = (p.a + (target - before[k]) / p.value).min(p.b);
        positions.push(x);
    }
    positions.push(x_max);

    let mut min_gap = f64::INFINITY;
    for w in positions.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    if !(min_gap >= MIN_SPACING) {
        return Err(Error::SpacingUnderflow { spacing: min_gap });
    }

    Ok(ParticleInit {
        positions,
        ell,
        mass,
        r_max: ell / min_gap,
    })
}

/// Integral of `datum` over `[a, b]`.
pub fn datum_mass(datum: &InitialDatum, a: f64, b: f64) -> f64 {
    datum.mass_between(a, b)
}
