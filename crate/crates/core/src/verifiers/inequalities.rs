//! Moser, Caccioppoli, L² Moser and Sobolev checks.

use serde::{Deserialize, Serialize};

use super::{
    check_ball_in_grid, gradient_squared, lattice_integral, lattice_sup, BallDescriptor,
    SweepParams, VerificationReport,
};
use crate::error::{LabError, Result};
use crate::geometry::{integrate_over_ball, measure_ball, QuarterBall};
use crate::grid::HarmonicGrid;
use crate::quadrature::gauss_legendre;

const MEASURE_TOL: f64 = 1e-10;

fn resolution(u: &HarmonicGrid<f64>) -> f64 {
    let x = &u.x_nodes;
    if x.len() < 2 {
        return 1.0;
    }
    ((x.len() - 1) as f64 / (x[x.len() - 1] - x[0])).round()
}

fn params(u: &HarmonicGrid<f64>, ball: &QuarterBall<f64>) -> SweepParams {
    SweepParams {
        ball: Some(BallDescriptor::from(ball)),
        ..SweepParams::new(u.lambda.get())
    }
}

/// `sup_B |u|` against `[(1/m̃_λ(12B)) ∬_{12B} |u|^p dm̃_λ]^{1/p}`.
pub fn verify_moser(
    u: &HarmonicGrid<f64>,
    ball: &QuarterBall<f64>,
    p: f64,
) -> Result<VerificationReport> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(LabError::invalid(format!(
            "moser exponent must be positive, got {p}"
        )));
    }
    let lambda = u.lambda.get();
    let big = ball.with_radius(12.0 * ball.radius);
    check_ball_in_grid(u, &big)?;
    let (sup, nodes) = lattice_sup(u, ball)?;
    let m = measure_ball(&big, lambda, MEASURE_TOL)?;
    let integral = lattice_integral(&u.t_nodes, &u.x_nodes, &u.values, &big, lambda, |v| {
        v.abs().powf(p)
    })?;
    let rhs = (integral / m).powf(1.0 / p);
    let mut params = params(u, ball);
    params.p = Some(p);
    Ok(
        VerificationReport::new("moser", "", params, sup, rhs, resolution(u))
            .with_extra("nodes_in_ball", nodes as f64)
            .with_extra("enlarged_measure", m),
    )
}

/// `∬_B |∇u|² dm̃_λ` against `R⁻² ∬_{2B} |u|² dm̃_λ`.
pub fn verify_caccioppoli(
    u: &HarmonicGrid<f64>,
    ball: &QuarterBall<f64>,
) -> Result<VerificationReport> {
    let lambda = u.lambda.get();
    let big = ball.with_radius(2.0 * ball.radius);
    check_ball_in_grid(u, &big)?;
    let grad = gradient_squared(u);
    let lhs = lattice_integral(&u.t_nodes, &u.x_nodes, &grad, ball, lambda, |v| v)?;
    let l2 = lattice_integral(&u.t_nodes, &u.x_nodes, &u.values, &big, lambda, |v| v * v)?;
    let rhs = l2 / (ball.radius * ball.radius);
    Ok(VerificationReport::new(
        "caccioppoli",
        "",
        params(u, ball),
        lhs,
        rhs,
        resolution(u),
    ))
}

/// `sup_{αB} |u|` against `[(1/m̃_λ((1−α)B)) ∬_B |u|² dm̃_λ]^{1/2}` for a
/// ball of radius `r ≤ x₀/2`, where `x ∼ x₀` holds on it.
pub fn verify_l2_moser(
    u: &HarmonicGrid<f64>,
    ball: &QuarterBall<f64>,
    alpha: f64,
) -> Result<VerificationReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if ball.radius > 0.5 * ball.x0 {
        return Err(LabError::invalid(format!(
            "L2 Moser check needs r <= x0/2 (far from the axis), got r = {}, x0 = {}",
            ball.radius, ball.x0
        )));
    }
    let lambda = u.lambda.get();
    check_ball_in_grid(u, ball)?;
    let (sup, nodes) = lattice_sup(u, &ball.with_radius(alpha * ball.radius))?;
    let l2 = lattice_integral(&u.t_nodes, &u.x_nodes, &u.values, ball, lambda, |v| v * v)?;
    let m = measure_ball(
        &ball.with_radius((1.0 - alpha) * ball.radius),
        lambda,
        MEASURE_TOL,
    )?;
    let mut params = params(u, ball);
    params.alpha = Some(alpha);
    Ok(
        VerificationReport::new("l2moser", "", params, sup, (l2 / m).sqrt(), resolution(u))
            .with_extra("nodes_in_ball", nodes as f64),
    )
}

/// A `C²` function with closed-form derivatives.
pub trait SmoothField {
    fn value(&self, t: f64, x: f64) -> f64;
    /// `(∂ₜf, ∂ₓf)`.
    fn gradient(&self, t: f64, x: f64) -> [f64; 2];
    /// `(∂ₜₜf, ∂ₜₓf, ∂ₓₓf)`.
    fn hessian(&self, t: f64, x: f64) -> [f64; 3];
}

/// Fixed profiles `g(s, y)` placed on a ball through
/// `f(t, x) = g((t − t₀)/R, (x − x₀)/R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    /// `f(t, x) = t`, not rescaled.
    LinearT,
    /// `g = exp(−(s² + y²)/2) (1 + s/2)`.
    Bump,
    /// `g = s² − y² + s y / 2 + 1`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeOnBall {
    pub shape: Shape,
    pub t0: f64,
    pub x0: f64,
    pub scale: f64,
}

impl ShapeOnBall {
    fn local(&self, t: f64, x: f64) -> (f64, f64) {
        ((t - self.t0) / self.scale, (x - self.x0) / self.scale)
    }
}

impl SmoothField for ShapeOnBall {
    fn value(&self, t: f64, x: f64) -> f64 {
        let (s, y) = self.local(t, x);
        match self.shape {
            Shape::Constant => 1.0,
            Shape::LinearT => t,
            Shape::Bump => (-(s * s + y * y) / 2.0).exp() * (1.0 + s / 2.0),
            Shape::Quadratic => s * s - y * y + s * y / 2.0 + 1.0,
        }
    }

    fn gradient(&self, t: f64, x: f64) -> [f64; 2] {
        let (s, y) = self.local(t, x);
        let k = 1.0 / self.scale;
        match self.shape {
            Shape::Constant => [0.0, 0.0],
            Shape::LinearT => [1.0, 0.0],
            Shape::Bump => {
                let e = (-(s * s + y * y) / 2.0).exp();
                let a = 1.0 + s / 2.0;
                [k * e * (0.5 - s * a), k * e * (-y * a)]
            }
            Shape::Quadratic => [k * (2.0 * s + y / 2.0), k * (-2.0 * y + s / 2.0)],
        }
    }

    fn hessian(&self, t: f64, x: f64) -> [f64; 3] {
        let (s, y) = self.local(t, x);
        let k2 = 1.0 / (self.scale * self.scale);
        match self.shape {
            Shape::Constant | Shape::LinearT => [0.0; 3],
            Shape::Bump => {
                let e = (-(s * s + y * y) / 2.0).exp();
                let a = 1.0 + s / 2.0;
                // g_s = e (1/2 − s a), g_y = −e y a
                let gss = e * (-s * (0.5 - s * a) - a - s / 2.0);
                let gsy = e * (-y * (0.5 - s * a));
                let gyy = e * a * (y * y - 1.0);
                [k2 * gss, k2 * gsy, k2 * gyy]
            }
            Shape::Quadratic => [2.0 * k2, 0.5 * k2, -2.0 * k2],
        }
    }
}

const SOBOLEV_RADII: usize = 48;
const SOBOLEV_ANGLES: usize = 96;

/// `sup_B |f|` against
/// `(R⁻² ∬_B f²)^{1/2} + (∬_B |∇f|²)^{1/2} + (R² ∬_B |∇²f|²)^{1/2}`
/// with unweighted area measure; the ball must not meet the axes.
pub fn verify_sobolev<F: SmoothField + ?Sized>(
    f: &F,
    ball: &QuarterBall<f64>,
) -> Result<VerificationReport> {
    let r = ball.radius;
    if ball.t0 <= r || ball.x0 <= r {
        return Err(LabError::invalid(
            "Sobolev check needs a ball inside the open quadrant",
        ));
    }
    let mut sup = f.value(ball.t0, ball.x0).abs();
    for i in 1..=SOBOLEV_RADII {
        let rho = r * i as f64 / SOBOLEV_RADII as f64;
        for k in 0..SOBOLEV_ANGLES {
            let th = 2.0 * std::f64::consts::PI * k as f64 / SOBOLEV_ANGLES as f64;
            sup = sup.max(
                f.value(ball.t0 + rho * th.cos(), ball.x0 + rho * th.sin())
                    .abs(),
            );
        }
    }
    let inner = gauss_legendre(24, -1.0, 1.0)?;
    let tol = 1e-10;
    let l2 = integrate_over_ball(ball, &inner, tol, |t, x| f.value(t, x).powi(2))?;
    let grad = integrate_over_ball(ball, &inner, tol, |t, x| {
        let [a, b] = f.gradient(t, x);
        a * a + b * b
    })?;
    let hess = integrate_over_ball(ball, &inner, tol, |t, x| {
        let [a, b, c] = f.hessian(t, x);
        a * a + 2.0 * b * b + c * c
    })?;
    let terms = [(l2 / (r * r)).sqrt(), grad.sqrt(), (r * r * hess).sqrt()];
    let rhs = terms.iter().sum::<f64>();
    let params = SweepParams {
        ball: Some(BallDescriptor::from(ball)),
        ..SweepParams::new(0.0)
    };
    Ok(VerificationReport::new(
        "sobolev",
        "",
        params,
        sup,
        rhs,
        (SOBOLEV_RADII * SOBOLEV_ANGLES) as f64,
    )
    .with_extra("term_l2", terms[0])
    .with_extra("term_gradient", terms[1])
    .with_extra("term_hessian", terms[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LambdaParam;
    use crate::grid::{uniform_nodes, Provenance};
    use std::f64::consts::PI;

    fn grid<F: Fn(f64, f64) -> f64>(l: f64, n: usize, u: F) -> HarmonicGrid<f64> {
        HarmonicGrid::from_fn(
            uniform_nodes(0.25, 6.25, 6 * n + 1),
            uniform_nodes(0.0, 6.0, 6 * n + 1),
            LambdaParam::new(l).unwrap(),
            Provenance::Analytic,
            u,
        )
        .unwrap()
    }

    #[test]
    fn constants_give_unit_moser_ratio_and_zero_gradient() {
        let g = grid(1.0, 8, |_, _| 2.5);
        let ball = QuarterBall::new(3.0, 2.0, 0.2).unwrap();
        for p in [0.5, 1.0, 2.0, 4.0] {
            let r = verify_moser(&g, &ball, p).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-6, "{p} {}", r.ratio);
        }
        let c = verify_caccioppoli(&g, &ball).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs > 0.0);
    }

    #[test]
    fn caccioppoli_for_linear_t() {
        // lhs = m̃(B), rhs = R⁻² ∬_{2B} t² dm̃
        let g = grid(1.0, 16, |t, _| t);
        let ball = QuarterBall::new(3.0, 2.0, 0.25).unwrap();
        let r = verify_caccioppoli(&g, &ball).unwrap();
        let m = measure_ball(&ball, 1.0, 1e-12).unwrap();
        assert!((r.lhs - m).abs() < 1e-6 * m);
        let big = ball.with_radius(0.5);
        let inner = gauss_legendre(24, -1.0, 1.0).unwrap();
        let exact =
            integrate_over_ball(&big, &inner, 1e-12, |t, x| t * t * x * x).unwrap() / 0.0625;
        assert!((r.rhs - exact).abs() < 1e-4 * exact);
    }

    #[test]
    fn l2_moser_constant_and_geometry() {
        let g = grid(1.0, 8, |_, _| 1.0);
        let ball = QuarterBall::new(3.0, 2.0, 0.5).unwrap();
        let r = verify_l2_moser(&g, &ball, 0.5).unwrap();
        let ratio = (measure_ball(&ball.with_radius(0.25), 1.0, 1e-12).unwrap()
            / measure_ball(&ball, 1.0, 1e-12).unwrap())
        .sqrt();
        assert!((r.ratio - ratio).abs() < 1e-6);
        assert!(r.ratio <= 1.0);
        assert!(verify_l2_moser(&g, &QuarterBall::new(3.0, 0.5, 0.5).unwrap(), 0.5).is_err());
    }

    #[test]
    fn moser_scales_with_u() {
        let g = grid(0.3, 8, |t, x| (1.0 + 0.6) * t * t - x * x + 20.0);
        let ball = QuarterBall::new(3.0, 1.0, 0.2).unwrap();
        let a = verify_moser(&g, &ball, 0.5).unwrap();
        for c in [4.0, 3.0, 1e-3] {
            let b = verify_moser(&g.scaled(c), &ball, 0.5).unwrap();
            assert!((a.ratio - b.ratio).abs() < 1e-12 * a.ratio);
        }
    }

    #[test]
    fn sobolev_closed_forms_and_scaling() {
        let ball = QuarterBall::new(2.0, 2.0, 1.0).unwrap();
        let one = ShapeOnBall {
            shape: Shape::Constant,
            t0: 2.0,
            x0: 2.0,
            scale: 1.0,
        };
        let r = verify_sobolev(&one, &ball).unwrap();
        assert!((r.ratio - 1.0 / PI.sqrt()).abs() < 1e-9);
        let lin = ShapeOnBall {
            shape: Shape::LinearT,
            ..one
        };
        let r = verify_sobolev(&lin, &ball).unwrap();
        let rhs = (PI * (4.0 + 0.25)).sqrt() + PI.sqrt();
        assert!((r.ratio - 3.0 / rhs).abs() < 1e-9);
        let ratios: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&s| {
                let b = QuarterBall::new(2.0 * s, 2.0 * s, s).unwrap();
                let f = ShapeOnBall {
                    shape: Shape::Bump,
                    t0: 2.0 * s,
                    x0: 2.0 * s,
                    scale: s,
                };
                verify_sobolev(&f, &b).unwrap().ratio
            })
            .collect();
        assert!((ratios[0] - ratios[2]).abs() < 1e-9 * ratios[1]);
    }

    #[test]
    fn shape_derivatives_match_differences() {
        let f = ShapeOnBall {
            shape: Shape::Bump,
            t0: 1.0,
            x0: 2.0,
            scale: 0.7,
        };
        let q = ShapeOnBall {
            shape: Shape::Quadratic,
            ..f
        };
        let h = 1e-5;
        for s in [f, q] {
            let (t, x) = (1.3, 1.6);
            let g = s.gradient(t, x);
            assert!((g[0] - (s.value(t + h, x) - s.value(t - h, x)) / (2.0 * h)).abs() < 1e-8);
            assert!((g[1] - (s.value(t, x + h) - s.value(t, x - h)) / (2.0 * h)).abs() < 1e-8);
            let hs = s.hessian(t, x);
            assert!(
                (hs[0] - (s.gradient(t + h, x)[0] - s.gradient(t - h, x)[0]) / (2.0 * h)).abs()
                    < 1e-7
            );
            assert!(
                (hs[1] - (s.gradient(t, x + h)[0] - s.gradient(t, x - h)[0]) / (2.0 * h)).abs()
                    < 1e-7
            );
            assert!(
                (hs[2] - (s.gradient(t, x + h)[1] - s.gradient(t, x - h)[1]) / (2.0 * h)).abs()
                    < 1e-7
            );
        }
    }
}
