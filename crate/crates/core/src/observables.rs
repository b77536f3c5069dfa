//! Density reconstruction and the quantities measured on it: total variation,
//! Wasserstein distance, local mass drift, and L1 distance to exact LWR solutions.

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::model::VelocityModel;
use crate::turning::cumulative_mass;

/// Integral over `[0, w]` of `|d|` for `d` linear from `d0` to `d1`.
fn abs_linear_integral(d0: f64, d1: f64, w: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * (d0.abs() + d1.abs()) * w
    } else {
        (d0 * d0 + d1 * d1) / (2.0 * (d0.abs() + d1.abs())) * w
    }
}

/// Piecewise-constant density `ell / (x_{i+1} - x_i)` on each gap, zero outside.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    positions: Vec<f64>,
    ell: f64,
}

impl DensityProfile {
    pub fn new(positions: &[f64], ell: f64) -> Self {
        Self {
            positions: positions.to_vec(),
            ell,
        }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Density on each gap.
    pub fn gap_densities(&self) -> Vec<f64> {
        self.positions
            .windows(2)
            .map(|w| self.ell / (w[1] - w[0]))
            .collect()
    }

    pub fn density_at(&self, x: f64) -> f64 {
        let k = self.positions.partition_point(|&p| p <= x);
        if k == 0 || k == self.positions.len() {
            return 0.0;
        }
        self.ell / (self.positions[k] - self.positions[k - 1])
    }

    pub fn mass(&self) -> f64 {
        self.ell * (self.positions.len() - 1) as f64
    }

    /// Mass in `[a, b]`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        cumulative_mass(&self.positions, self.ell, b)
            - cumulative_mass(&self.positions, self.ell, a)
    }

    /// Total variation on the whole line, counting the jumps from and to vacuum.
    pub fn total_variation(&self) -> f64 {
        let r = self.gap_densities();
        let inner: f64 = r.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        r[0] + r[r.len() - 1] + inner
    }

    /// Total variation on the open interval `(a, b)`: the jumps at the
    /// particle positions lying strictly inside it.
    pub fn total_variation_in(&self, a: f64, b: f64) -> f64 {
        let x = &self.positions;
        let n = x.len() - 1;
        let mut tv = 0.0;
        for i in 0..=n {
            if !(a < x[i] && x[i] < b) {
                continue;
            }
            let left = if i == 0 {
                0.0
            } else {
                self.ell / (x[i] - x[i - 1])
            };
            let right = if i == n {
                0.0
            } else {
                self.ell / (x[i + 1] - x[i])
            };
            tv += (right - left).abs();
        }
        tv
    }

    pub fn pseudo_inverse(&self) -> PseudoInverse {
        let segments = self
            .positions
            .windows(2)
            .enumerate()
            .map(|(j, w)| MassSegment {
                m0: j as f64 * self.ell,
                m1: (j + 1) as f64 * self.ell,
                x0: w[0],
                x1: w[1],
            })
            .collect();
        PseudoInverse { segments }
    }

    /// Exact L1 distance to a piecewise-linear profile.
    pub fn l1_distance(&self, other: &PiecewiseLinear) -> f64 {
        self.l1_distance_in(other, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Exact L1 distance to a piecewise-linear profile over `[lo, hi]`.
    pub fn l1_distance_in(&self, other: &PiecewiseLinear, lo: f64, hi: f64) -> f64 {
        let knots = other.pieces.iter().flat_map(|p| [p.a, p.b]);
        let cuts = clipped_cuts(self.positions.iter().copied().chain(knots), lo, hi);
        cuts.windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let mid = 0.5 * (a + b);
                let rho = self.density_at(mid);
                let (ya, yb) = other.ends_on(a, b, mid);
                abs_linear_integral(rho - ya, rho - yb, b - a)
            })
            .sum()
    }
}

/// Sorted distinct cut points inside `[lo, hi]`, with the finite ends added.
fn clipped_cuts(points: impl Iterator<Item = f64>, lo: f64, hi: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = points.filter(|&x| lo <= x && x <= hi).collect();
    cuts.extend([lo, hi].into_iter().filter(|x| x.is_finite()));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Exact L1 distance between two particle densities.
pub fn l1_between(a: &DensityProfile, b: &DensityProfile) -> f64 {
    let cuts = clipped_cuts(
        a.positions.iter().chain(&b.positions).copied(),
        f64::NEG_INFINITY,
        f64::INFINITY,
    );
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (a.density_at(mid) - b.density_at(mid)).abs() * (w[1] - w[0])
        })
        .sum()
}

/// One linear piece of a pseudo-inverse, mapping mass `[m0, m1]` to `[x0, x1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassSegment {
    pub m0: f64,
    pub m1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl MassSegment {
    fn at(&self, m: f64) -> f64 {
        if self.m1 == self.m0 {
            return self.x0;
        }
        self.x0 + (m - self.m0) * (self.x1 - self.x0) / (self.m1 - self.m0)
    }
}

/// Position as a function of cumulative mass, linear between knots.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoInverse {
    segments: Vec<MassSegment>,
}

impl PseudoInverse {
    /// Pseudo-inverse of a piecewise-constant datum; vacuum gaps become jumps.
    pub fn of_datum(datum: &InitialDatum) -> Self {
        let mut m = 0.0;
        let segments = datum
            .pieces()
            .iter()
            .map(|p| {
                let seg = MassSegment {
                    m0: m,
                    m1: m + p.mass(),
                    x0: p.a,
                    x1: p.b,
                };
                m = seg.m1;
                seg
            })
            .collect();
        Self { segments }
    }

    pub fn segments(&self) -> &[MassSegment] {
        &self.segments
    }

    pub fn mass(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.m1)
    }

    fn segment_for(&self, m: f64) -> &MassSegment {
        let k = self.segments.partition_point(|s| s.m1 <= m);
        &self.segments[k.min(self.segments.len() - 1)]
    }
}

/// Exact 1-Wasserstein distance between two distributions of equal mass.
pub fn wasserstein1(a: &PseudoInverse, b: &PseudoInverse) -> Result<f64> {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > 1e-12 * ma.max(1.0) {
        return Err(Error::MassMismatch { a: ma, b: mb });
    }
    let mut cuts: Vec<f64> = a
        .segments
        .iter()
        .chain(&b.segments)
        .flat_map(|s| [s.m0, s.m1])
        .filter(|&m| m <= ma.min(mb))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let mid = 0.5 * (p + q);
        let (sa, sb) = (a.segment_for(mid), b.segment_for(mid));
        total += abs_linear_integral(sa.at(p) - sb.at(p), sa.at(q) - sb.at(q), q - p);
    }
    Ok(total)
}

/// Change of the mass inside `[a, b]` between two profiles.
pub fn windowed_mass_drift(before: &DensityProfile, after: &DensityProfile, a: f64, b: f64) -> f64 {
    (after.mass_in(a, b) - before.mass_in(a, b)).abs()
}

/// A density linear on `[a, b]`, from `ya` to `yb`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearPiece {
    pub a: f64,
    pub b: f64,
    pub ya: f64,
    pub yb: f64,
}

impl LinearPiece {
    fn at(&self, x: f64) -> f64 {
        if self.b == self.a {
            return self.ya;
        }
        self.ya + (x - self.a) * (self.yb - self.ya) / (self.b - self.a)
    }
}

/// Density made of non-overlapping linear pieces, zero elsewhere.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PiecewiseLinear {
    pieces: Vec<LinearPiece>,
}

impl PiecewiseLinear {
    pub fn new(mut pieces: Vec<LinearPiece>) -> Self {
        pieces.retain(|p| p.b > p.a);
        pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
        Self { pieces }
    }

    pub fn pieces(&self) -> &[LinearPiece] {
        &self.pieces
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.a <= x && x < p.b)
            .map_or(0.0, |p| p.at(x))
    }

    pub fn mass(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| 0.5 * (p.ya + p.yb) * (p.b - p.a))
            .sum()
    }

    /// Values at `a` and `b` of the piece containing `mid`.
    fn ends_on(&self, a: f64, b: f64, mid: f64) -> (f64, f64) {
        match self.pieces.iter().find(|p| p.a <= mid && mid < p.b) {
            Some(p) => (p.at(a), p.at(b)),
            None => (0.0, 0.0),
        }
    }
}

fn require_affine(model: &VelocityModel) -> Result<()> {
    if model.is_affine() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "exact LWR references need the affine speed law".into(),
        ))
    }
}

/// Entropy solution of a Riemann problem for `rho_t + f(rho)_x = 0` with
/// the affine speed law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannSolution {
    pub rho_left: f64,
    pub rho_right: f64,
    pub x0: f64,
    v_max: f64,
    rho_max: f64,
}

impl RiemannSolution {
    pub fn new(model: &VelocityModel, rho_left: f64, rho_right: f64, x0: f64) -> Result<Self> {
        require_affine(model)?;
        for rho in [rho_left, rho_right] {
            if !(0.0..=model.rho_max()).contains(&rho) {
                return Err(Error::DensityOutOfRange {
                    rho,
                    rho_max: model.rho_max(),
                });
            }
        }
        Ok(Self {
            rho_left,
            rho_right,
            x0,
            v_max: model.v_max(),
            rho_max: model.rho_max(),
        })
    }

    fn char_speed(&self, rho: f64) -> f64 {
        self.v_max * (1.0 - 2.0 * rho / self.rho_max)
    }

    /// Shock speed, or `None` for a rarefaction.
    pub fn shock_speed(&self) -> Option<f64> {
        (self.rho_left <= self.rho_right)
            .then(|| self.v_max * (1.0 - (self.rho_left + self.rho_right) / self.rho_max))
    }

    pub fn density_at(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return if x < self.x0 {
                self.rho_left
            } else {
                self.rho_right
            };
        }
        let s = (x - self.x0) / t;
        match self.shock_speed() {
            Some(speed) => {
                if s < speed {
                    self.rho_left
                } else {
                    self.rho_right
                }
            }
            None => {
                if s <= self.char_speed(self.rho_left) {
                    self.rho_left
                } else if s >= self.char_speed(self.rho_right) {
                    self.rho_right
                } else {
                    0.5 * self.rho_max * (1.0 - s / self.v_max)
                }
            }
        }
    }
}

/// Exact solution at time `t` for a uniform block `value` on `[-b, b)` split
/// at the centre, the left half heading left and the right half right.
///
/// Each half is a vacuum shock behind the crowd plus a rarefaction at its
/// front; the formula holds until the shock meets the rarefaction tail at
/// `t = b rho_max / (v_max value)`.
pub fn block_reference(
    model: &VelocityModel,
    value: f64,
    b: f64,
    t: f64,
) -> Result<PiecewiseLinear> {
    require_affine(model)?;
    let (v_max, rho_max) = (model.v_max(), model.rho_max());
    if !(value > 0.0 && value <= rho_max) {
        return Err(Error::DensityOutOfRange {
            rho: value,
            rho_max,
        });
    }
    let valid_until = b * rho_max / (v_max * value);
    if !(t >= 0.0 && t < valid_until) {
        return Err(Error::Unsupported(format!(
            "block reference only valid for t < {valid_until}, got {t}"
        )));
    }
    let shock = v_max * (1.0 - value / rho_max) * t;
    let tail = b + v_max * (1.0 - 2.0 * value / rho_max) * t;
    let head = b + v_max * t;
    let right = [
        LinearPiece {
            a: shock,
            b: tail,
            ya: value,
            yb: value,
        },
        LinearPiece {
            a: tail,
            b: head,
            ya: value,
            yb: 0.0,
        },
    ];
    let mut pieces: Vec<LinearPiece> = right
        .iter()
        .map(|p| LinearPiece {
            a: -p.b,
            b: -p.a,
            ya: p.yb,
            yb: p.ya,
        })
        .collect();
    pieces.extend(right);
    Ok(PiecewiseLinear::new(pieces))
}
