//! Empirical checks of the inequalities satisfied by λ-harmonic functions.
//!
//! Every check produces a [`VerificationReport`] holding the two sides of an
//! inequality and their ratio. Constants are measured and reported; the
//! suites assert finiteness and stability under refinement.
//!
//! This layer works in `f64`.

mod inequalities;
mod iteration;
mod maximal_checks;
mod polar;
pub mod studies;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{integrate_over_ball, BallRegime, QuarterBall};
use crate::grid::{bilinear, HarmonicGrid};
use crate::quadrature::{gauss_legendre, QuadratureRule};

pub use inequalities::{
    verify_caccioppoli, verify_l2_moser, verify_moser, verify_sobolev, Shape, ShapeOnBall,
    SmoothField,
};
pub use iteration::{
    default_tau, iteration_constant, iteration_demo, iteration_partial_sum, IterationInput,
};
pub use maximal_checks::{
    maximal_lattice, verify_domination, verify_norm_equivalence, DominationProfile, MaximalData,
    MaximalLattice,
};
pub use polar::{kernel_sup, polar_case_check, polar_quantities, ChainSample, PolarProfile};

/// Relative tolerance of the ball integrals over lattice data.
pub const BALL_INTEGRAL_TOL: f64 = 1e-7;
/// Relative slack allowed when an inequality holds by construction and
/// only rounding separates the two sides.
pub const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDescriptor {
    pub t0: f64,
    pub x0: f64,
    pub radius: f64,
    pub regime: BallRegime,
}

impl From<&QuarterBall<f64>> for BallDescriptor {
    fn from(b: &QuarterBall<f64>) -> Self {
        Self {
            t0: b.t0,
            x0: b.x0,
            radius: b.radius,
            regime: if b.is_far_from_axis() {
                BallRegime::FarFromAxis
            } else {
                BallRegime::NearAxis
            },
        }
    }
}

/// The sweep point a report belongs to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallDescriptor>,
}

impl SweepParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }
}

/// One resolution of a refinement study; `resolution` is nodes per unit
/// length (or quadrature nodes where no lattice is involved).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub resolution: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Status {
    /// Ratio finite at every level.
    pub finite: bool,
    /// All checks internal to the verifier passed.
    pub passed: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub label: String,
    pub params: SweepParams,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub status: Status,
    pub refinement: Vec<RefinementLevel>,
    /// Named auxiliary scalars (node counts, measures, fitted constants).
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DominationProfile>,
}

impl VerificationReport {
    pub fn new(
        suite: &str,
        label: impl Into<String>,
        params: SweepParams,
        lhs: f64,
        rhs: f64,
        resolution: f64,
    ) -> Self {
        let ratio = lhs / rhs;
        let finite = ratio.is_finite();
        let mut status = Status {
            finite,
            passed: finite,
            flags: Vec::new(),
        };
        if !finite {
            status.flags.push("ratio_not_finite".into());
        }
        Self {
            suite: suite.to_string(),
            label: label.into(),
            params,
            lhs,
            rhs,
            ratio,
            status,
            refinement: vec![RefinementLevel {
                resolution,
                lhs,
                rhs,
                ratio,
            }],
            extra: BTreeMap::new(),
            profile: None,
        }
    }

    pub fn with_extra(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }

    /// Records a failed internal check.
    pub fn fail(&mut self, flag: impl Into<String>) {
        self.status.passed = false;
        self.status.flags.push(flag.into());
    }

    /// Appends the levels of `finer` and adopts its values.
    pub fn refine(mut self, finer: VerificationReport) -> Self {
        self.refinement.extend(finer.refinement);
        self.lhs = finer.lhs;
        self.rhs = finer.rhs;
        self.ratio = finer.ratio;
        self.status.finite &= finer.status.finite;
        self.status.passed &= finer.status.passed;
        for f in finer.status.flags {
            if !self.status.flags.contains(&f) {
                self.status.flags.push(f);
            }
        }
        for (k, v) in finer.extra {
            self.extra.insert(k, v);
        }
        if finer.profile.is_some() {
            self.profile = finer.profile;
        }
        self
    }

    /// Relative change of the ratio between the last two levels.
    pub fn drift(&self) -> Option<f64> {
        let n = self.refinement.len();
        (n >= 2)
            .then(|| relative_change(self.refinement[n - 2].ratio, self.refinement[n - 1].ratio))
    }
}

/// `|b − a| / |a|`, zero when both vanish.
pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs()
    }
}

fn inner_rule() -> Result<QuadratureRule<f64>> {
    gauss_legendre(32, -1.0, 1.0)
}

/// Errors unless `ball` lies inside the lattice; the ball may be clipped
/// by the axis `x = 0` only when the lattice starts there.
pub fn check_ball_in_grid(grid: &HarmonicGrid<f64>, ball: &QuarterBall<f64>) -> Result<()> {
    let (t, x) = (&grid.t_nodes, &grid.x_nodes);
    let r = ball.radius;
    let x_lo_ok = ball.x0 - r >= x[0] || x[0] == 0.0;
    if ball.t0 - r < t[0]
        || ball.t0 + r > t[t.len() - 1]
        || ball.x0 + r > x[x.len() - 1]
        || !x_lo_ok
    {
        return Err(LabError::invalid(format!(
            "ball ({}, {}; {}) exceeds the lattice [{}, {}] x [{}, {}]",
            ball.t0,
            ball.x0,
            r,
            t[0],
            t[t.len() - 1],
            x[0],
            x[x.len() - 1]
        )));
    }
    Ok(())
}

/// Largest `|u|` over lattice nodes in the closed ball, with the node count.
pub fn lattice_sup(grid: &HarmonicGrid<f64>, ball: &QuarterBall<f64>) -> Result<(f64, usize)> {
    check_ball_in_grid(grid, ball)?;
    let r2 = ball.radius * ball.radius;
    let mut best = 0.0f64;
    let mut count = 0;
    for (i, &t) in grid.t_nodes.iter().enumerate() {
        let dt = t - ball.t0;
        if dt * dt > r2 {
            continue;
        }
        for (j, &x) in grid.x_nodes.iter().enumerate() {
            let dx = x - ball.x0;
            if dt * dt + dx * dx <= r2 {
                best = best.max(grid.values[[i, j]].abs());
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(LabError::invalid(format!(
            "ball ({}, {}; {}) contains no lattice node",
            ball.t0, ball.x0, ball.radius
        )));
    }
    Ok((best, count))
}

/// `∬_B phi(v) x^{2λ} dt dx` for the bilinear interpolant `v` of lattice data.
pub fn lattice_integral<P: Fn(f64) -> f64>(
    t_nodes: &[f64],
    x_nodes: &[f64],
    values: &Array2<f64>,
    ball: &QuarterBall<f64>,
    lambda: f64,
    phi: P,
) -> Result<f64> {
    let two_lambda = 2.0 * lambda;
    let (t_lo, t_hi) = (t_nodes[0], t_nodes[t_nodes.len() - 1]);
    let (x_lo, x_hi) = (x_nodes[0], x_nodes[x_nodes.len() - 1]);
    integrate_over_ball(ball, &inner_rule()?, BALL_INTEGRAL_TOL, |t, x| {
        // slice ends can round just past the lattice
        let v = bilinear(
            t_nodes,
            x_nodes,
            values,
            t.clamp(t_lo, t_hi),
            x.clamp(x_lo, x_hi),
        )
        .unwrap_or(0.0);
        phi(v) * x.powf(two_lambda)
    })
}

/// `|∇u|²` from central differences, one-sided at the lattice edges and
/// `∂ₓu = 0` on the axis `x = 0` (even extension).
pub fn gradient_squared(grid: &HarmonicGrid<f64>) -> Array2<f64> {
    let (nt, nx) = grid.dim();
    let (t, x, v) = (&grid.t_nodes, &grid.x_nodes, &grid.values);
    let diff = |lo: f64, hi: f64, a: f64, b: f64| (b - a) / (hi - lo);
    Array2::from_shape_fn((nt, nx), |(i, j)| {
        let dt = match (i, nt) {
            (_, 1) => 0.0,
            (0, _) => diff(t[0], t[1], v[[0, j]], v[[1, j]]),
            (i, n) if i == n - 1 => diff(t[i - 1], t[i], v[[i - 1, j]], v[[i, j]]),
            (i, _) => diff(t[i - 1], t[i + 1], v[[i - 1, j]], v[[i + 1, j]]),
        };
        let dx = match (j, nx) {
            (_, 1) => 0.0,
            (0, _) if x[0] == 0.0 => 0.0,
            (0, _) => diff(x[0], x[1], v[[i, 0]], v[[i, 1]]),
            (j, n) if j == n - 1 => diff(x[j - 1], x[j], v[[i, j - 1]], v[[i, j]]),
            (j, _) => diff(x[j - 1], x[j + 1], v[[i, j - 1]], v[[i, j + 1]]),
        };
        dt * dt + dx * dx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{measure_ball, LambdaParam};
    use crate::grid::{uniform_nodes, Provenance};

    fn grid<F: Fn(f64, f64) -> f64>(u: F) -> HarmonicGrid<f64> {
        HarmonicGrid::from_fn(
            uniform_nodes(0.25, 4.25, 129),
            uniform_nodes(0.0, 4.0, 129),
            LambdaParam::new(1.0).unwrap(),
            Provenance::Analytic,
            u,
        )
        .unwrap()
    }

    #[test]
    fn lattice_integral_of_one_is_the_measure() {
        let g = grid(|_, _| 1.0);
        for ball in [
            QuarterBall::new(2.0, 2.0, 0.5).unwrap(),
            QuarterBall::new(2.0, 0.3, 1.5).unwrap(),
        ] {
            let v = lattice_integral(&g.t_nodes, &g.x_nodes, &g.values, &ball, 1.0, |v| v).unwrap();
            let m = measure_ball(&ball, 1.0, 1e-12).unwrap();
            assert!((v - m).abs() < 1e-6 * m);
        }
    }

    #[test]
    fn lattice_integral_is_second_order() {
        // ∬ t over B((2,2),1) with weight x² is t₀·m̃(B)
        let ball = QuarterBall::new(2.0, 2.0, 1.0).unwrap();
        let m = measure_ball(&ball, 1.0, 1e-12).unwrap();
        let g = grid(|t, _| t * t);
        let v = lattice_integral(&g.t_nodes, &g.x_nodes, &g.values, &ball, 1.0, |v| v).unwrap();
        // ∬ t² x² = t₀² m̃ + ∬ (t − t₀)² x²; the bilinear error is O(h²)
        let exact =
            crate::geometry::integrate_over_ball(&ball, &inner_rule().unwrap(), 1e-12, |t, x| {
                t * t * x * x
            })
            .unwrap();
        assert!((v - exact).abs() < 1e-3 * exact);
        assert!(v > 4.0 * m);
    }

    #[test]
    fn sup_and_gradient() {
        let g = grid(|t, x| t + 2.0 * x);
        let ball = QuarterBall::new(2.0, 2.0, 0.5).unwrap();
        let (s, n) = lattice_sup(&g, &ball).unwrap();
        assert!(n > 100);
        assert!(s <= 2.0 + 4.0 + 0.5 * 5f64.sqrt() + 1e-12 && s > 6.9);
        let gs = gradient_squared(&g);
        assert!((gs[[10, 10]] - 5.0).abs() < 1e-12);
        assert_eq!(gs[[10, 0]], 1.0);
        assert!(lattice_sup(&g, &QuarterBall::new(4.0, 2.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn refine_tracks_drift() {
        let a = VerificationReport::new("s", "x", SweepParams::new(1.0), 2.0, 1.0, 16.0);
        let b = VerificationReport::new("s", "x", SweepParams::new(1.0), 2.1, 1.0, 32.0);
        let r = a.refine(b);
        assert_eq!(r.refinement.len(), 2);
        assert!((r.drift().unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(r.ratio, 2.1);
        let bad = VerificationReport::new("s", "x", SweepParams::new(1.0), 1.0, 0.0, 16.0);
        assert!(!bad.status.finite);
    }
}
