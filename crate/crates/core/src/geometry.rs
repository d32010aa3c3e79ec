//! Regions of the quarter plane and the weighted measures `dm_λ = x^{2λ} dx`
//! (intervals) and `dm̃_λ = dt x^{2λ} dx` (balls clipped to the quadrant).

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::adaptive_gauss;
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::scalar::Scalar;

/// Default relative tolerance of [`measure_ball`].
pub const BALL_MEASURE_TOL: f64 = 1e-8;

/// The Bessel parameter λ > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LambdaParam<T>(T);

impl<T: Scalar> LambdaParam<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if lambda > T::zero() && lambda.is_finite() {
            Ok(Self(lambda))
        } else {
            Err(LabError::invalid(format!(
                "lambda must be positive and finite, got {lambda}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    /// `2λ`, the exponent of the weight `x^{2λ}`.
    #[inline]
    pub fn weight_exponent(self) -> T {
        T::lit(2.0) * self.0
    }
}

/// `I(x, t) = (x − t, x + t) ∩ ℝ₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub center: T,
    pub radius: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(center: T, radius: T) -> Result<Self> {
        if !(center > T::zero())
            || !(radius >= T::zero())
            || !center.is_finite()
            || !radius.is_finite()
        {
            return Err(LabError::invalid(format!(
                "interval needs x > 0, t >= 0 (got x={center}, t={radius})"
            )));
        }
        Ok(Self { center, radius })
    }

    /// Realized endpoints after clipping at the origin.
    pub fn endpoints(&self) -> (T, T) {
        (
            (self.center - self.radius).max(T::zero()),
            self.center + self.radius,
        )
    }

    pub fn contains(&self, y: T) -> bool {
        let (a, b) = self.endpoints();
        y > a && y < b
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            center: self.center,
            radius: self.radius * k,
        }
    }
}

/// `B((t₀, x₀), R)` intersected with the open quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterBall<T> {
    pub t0: T,
    pub x0: T,
    pub radius: T,
}

impl<T: Scalar> QuarterBall<T> {
    pub fn new(t0: T, x0: T, radius: T) -> Result<Self> {
        let ok = t0 >= T::zero() && x0 >= T::zero() && radius >= T::zero();
        if !ok || !(t0 + x0 + radius).is_finite() {
            return Err(LabError::invalid(format!(
                "ball needs t0, x0 >= 0 and R >= 0 (got t0={t0}, x0={x0}, R={radius})"
            )));
        }
        Ok(Self { t0, x0, radius })
    }

    pub fn with_radius(&self, radius: T) -> Self {
        Self { radius, ..*self }
    }

    pub fn contains(&self, t: T, x: T) -> bool {
        let dt = t - self.t0;
        let dx = x - self.x0;
        t > T::zero() && x > T::zero() && dt * dt + dx * dx < self.radius * self.radius
    }

    /// Whether the ball lies in the far-from-axis regime `R ≤ x₀/4`.
    pub fn is_far_from_axis(&self) -> bool {
        self.radius <= self.x0 * T::lit(0.25)
    }
}

/// `m_λ(I) = ((x+t)^{2λ+1} − max(x−t,0)^{2λ+1}) / (2λ+1)`, for λ ≥ 0.
pub fn measure_interval<T: Scalar>(interval: &Interval<T>, lambda: T) -> T {
    let e = T::lit(2.0) * lambda + T::one();
    let (a, b) = interval.endpoints();
    (b.powf(e) - a.powf(e)) / e
}

/// `∫_a^b x^{2λ} dx` for `0 ≤ a ≤ b`.
pub fn weighted_length<T: Scalar>(a: T, b: T, lambda: T) -> T {
    let e = T::lit(2.0) * lambda + T::one();
    (b.powf(e) - a.max(T::zero()).powf(e)) / e
}

/// Integrates `outer(ψ)` for the parametrisation `t = t₀ + R sin ψ` of a
/// clipped ball. `outer` receives `(t, x_lo, x_hi, jacobian)`.
fn integrate_ball_slices<T, F>(ball: &QuarterBall<T>, tol_rel: T, mut slice: F) -> Result<T>
where
    T: Scalar,
    F: FnMut(T, T, T) -> T,
{
    let r = ball.radius;
    if r <= T::zero() {
        return Ok(T::zero());
    }
    let half_pi = T::FRAC_PI_2();
    let psi_lo = if ball.t0 >= r {
        -half_pi
    } else {
        (-ball.t0 / r).asin()
    };
    let psi_hi = half_pi;
    let mut breaks = vec![psi_lo, psi_hi];
    if ball.x0 < r {
        let k = (ball.x0 / r).acos();
        for cand in [-k, k] {
            if cand > psi_lo && cand < psi_hi {
                breaks.push(cand);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));

    let mut integrand = |psi: T| {
        let (s, c) = psi.sin_cos();
        let c = c.max(T::zero());
        let t = ball.t0 + r * s;
        let w = r * c;
        let x_lo = (ball.x0 - w).max(T::zero());
        let x_hi = ball.x0 + w;
        slice(t, x_lo, x_hi) * r * c
    };
    // coarse estimate sets the absolute tolerance for the adaptive pass
    let coarse = gauss_legendre(24, -T::one(), T::one())?;
    let mut rough = T::zero();
    for w in breaks.windows(2) {
        rough = rough + crate::quadrature::integrate_panels(&coarse, w, &mut integrand).abs();
    }
    if rough == T::zero() {
        return Ok(T::zero());
    }
    let tol_abs = tol_rel * rough;
    let mut total = T::zero();
    for w in breaks.windows(2) {
        let share = tol_abs * (w[1] - w[0]) / (psi_hi - psi_lo);
        total = total + adaptive_gauss(&mut integrand, w[0], w[1], share, 40)?;
    }
    Ok(total)
}

/// `m̃_λ(B) = ∬_B x^{2λ} dt dx` over the clipped ball to relative accuracy `tol`.
pub fn measure_ball<T: Scalar>(ball: &QuarterBall<T>, lambda: T, tol: T) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(LabError::invalid("measure tolerance must be positive"));
    }
    integrate_ball_slices(ball, tol, |_t, lo, hi| weighted_length(lo, hi, lambda))
}

/// `∬_B g(t, x) dt dx` over the clipped ball, with a fixed Gauss–Legendre
/// rule across each x-slice (g smooth) and adaptive refinement along t.
pub fn integrate_over_ball<T, G>(
    ball: &QuarterBall<T>,
    inner: &QuadratureRule<T>,
    tol: T,
    g: G,
) -> Result<T>
where
    T: Scalar,
    G: Fn(T, T) -> T,
{
    integrate_ball_slices(ball, tol, |t, lo, hi| {
        if hi <= lo {
            return T::zero();
        }
        let half = (hi - lo) * T::lit(0.5);
        let mid = (hi + lo) * T::lit(0.5);
        let mut acc = T::zero();
        for (&x, &w) in inner.nodes().iter().zip(inner.weights()) {
            acc = acc + w * g(t, mid + half * x);
        }
        acc * half
    })
}

/// Which normalisation [`comparable_measures_check`] used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallRegime {
    /// `R ≤ x₀/4`: ratio `m̃_λ(B(2R)) / (x₀^{2λ} R²)`.
    FarFromAxis,
    /// `R > x₀/4`: ratio `m̃_λ(B(12R)) / R^{2λ+2}`.
    NearAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparableMeasures<T> {
    pub regime: BallRegime,
    pub ratio: T,
}

/// Ratio of the enlarged-ball measure to its predicted scale in each regime.
pub fn comparable_measures_check<T: Scalar>(
    ball: &QuarterBall<T>,
    lambda: T,
) -> Result<ComparableMeasures<T>> {
    let tol = T::lit(BALL_MEASURE_TOL);
    let two_l = T::lit(2.0) * lambda;
    if ball.is_far_from_axis() {
        let m = measure_ball(&ball.with_radius(ball.radius * T::lit(2.0)), lambda, tol)?;
        Ok(ComparableMeasures {
            regime: BallRegime::FarFromAxis,
            ratio: m / (ball.x0.powf(two_l) * ball.radius * ball.radius),
        })
    } else {
        let m = measure_ball(&ball.with_radius(ball.radius * T::lit(12.0)), lambda, tol)?;
        Ok(ComparableMeasures {
            regime: BallRegime::NearAxis,
            ratio: m / ball.radius.powf(two_l + T::lit(2.0)),
        })
    }
}
