//! Poisson kernels for the Bessel Laplace equation.
//!
//! Both kernels reduce to the angular integral
//!
//! ```text
//! I(A, B) = ∫₀^π (sin β)^{2λ−1} / (A − B cos β)^{λ+1} dβ,   A ≥ B ≥ 0,
//! ```
//!
//! evaluated either with the sine-weighted Gauss–Jacobi rule (graded panels
//! when the integrand is nearly singular) or in closed form,
//!
//! ```text
//! I = B(λ, ½) c^{1−λ} F(−½, λ−1; λ+½; z) / (A² − B²),
//! c = (√(A+B) + √(A−B))² / 4,   z = ((√(A+B) − √(A−B)) / (√(A+B) + √(A−B)))².
//! ```
//!
//! Arguments are passed as `d_minus = A − B` and `d_plus = A + B`, which the
//! callers form without cancellation.

use crate::error::{LabError, Result};
use crate::geometry::LambdaParam;
use crate::quadrature::{gauss_jacobi, gauss_legendre, sine_weighted_rule, QuadratureRule};
use crate::scalar::Scalar;
use crate::special::{digamma, gamma, sine_power_integral};

/// Default number of nodes of the sine-weighted rule inside kernels.
pub const KERNEL_NODES: usize = 64;
/// Node count used by the verification suites.
pub const SUITE_KERNEL_NODES: usize = 128;
/// Relative disagreement between the `n` and `2n` rules that triggers doubling.
pub const KERNEL_SELF_CHECK: f64 = 1e-9;
const MAX_DOUBLINGS: usize = 4;
/// Below this `(A − B)/B` the integrand is resolved with graded panels.
const GRADED_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone)]
struct Level<T> {
    sine: QuadratureRule<T>,
    left_end: QuadratureRule<T>,
    right_end: QuadratureRule<T>,
    legendre: QuadratureRule<T>,
}

impl<T: Scalar> Level<T> {
    fn new(n: usize, lambda: T) -> Result<Self> {
        let e = lambda - T::one();
        let panel = n.min(24);
        Ok(Self {
            sine: sine_weighted_rule(n, lambda)?,
            left_end: gauss_jacobi(panel, T::zero(), e)?,
            right_end: gauss_jacobi(panel, e, T::zero())?,
            legendre: gauss_legendre(panel, -T::one(), T::one())?,
        })
    }

    fn integrate(&self, lambda: T, d_minus: T, d_plus: T) -> T {
        let half = T::lit(0.5);
        let b = (d_plus - d_minus) * half;
        let power = -(lambda + T::one());
        if b <= T::zero() || d_minus >= T::lit(GRADED_THRESHOLD) * b {
            return self.sine.sum(|beta| {
                let hb = beta * half;
                let (s, c) = hb.sin_cos();
                (d_minus * c * c + d_plus * s * s).powf(power)
            });
        }
        // s = 1 − cos β; the integrand is s^{λ−1} (2 − s)^{λ−1} (d_minus + b s)^{−λ−1}
        let e = lambda - T::one();
        let two = T::lit(2.0);
        let eps = d_minus / b;
        let smooth_mid = |s: T| s.powf(e) * (two - s).powf(e) * (d_minus + b * s).powf(power);
        let mut total = {
            let (lo, hi) = (T::zero(), eps);
            let h = (hi - lo) * half;
            let m = (hi + lo) * half;
            let mut acc = T::zero();
            for (&x, &w) in self.left_end.nodes().iter().zip(self.left_end.weights()) {
                let s = m + h * x;
                acc = acc + w * (two - s).powf(e) * (d_minus + b * s).powf(power);
            }
            acc * h.powf(lambda)
        };
        let mut lo = eps;
        while lo < T::one() {
            let hi = (lo * two).min(T::one());
            let h = (hi - lo) * half;
            let m = (hi + lo) * half;
            let mut acc = T::zero();
            for (&x, &w) in self.legendre.nodes().iter().zip(self.legendre.weights()) {
                acc = acc + w * smooth_mid(m + h * x);
            }
            total = total + acc * h;
            lo = hi;
        }
        // [1, 2] with (2 − s)^{λ−1} at the right end
        let h = half;
        let m = T::lit(1.5);
        let mut acc = T::zero();
        for (&x, &w) in self.right_end.nodes().iter().zip(self.right_end.weights()) {
            let s = m + h * x;
            acc = acc + w * s.powf(e) * (d_minus + b * s).powf(power);
        }
        total + acc * h.powf(lambda)
    }
}

/// The sine-weighted rule prepared for kernel evaluation, with an automatic
/// `n → 2n` self-check.
#[derive(Debug, Clone)]
pub struct KernelQuadrature<T> {
    lambda: LambdaParam<T>,
    n: usize,
    levels: [Level<T>; 2],
}

impl<T: Scalar> KernelQuadrature<T> {
    pub fn new(n: usize, lambda: LambdaParam<T>) -> Result<Self> {
        if n == 0 {
            return Err(LabError::invalid("kernel quadrature needs n >= 1"));
        }
        let l = lambda.get();
        Ok(Self {
            lambda,
            n,
            levels: [Level::new(n, l)?, Level::new(2 * n, l)?],
        })
    }

    pub fn lambda(&self) -> LambdaParam<T> {
        self.lambda
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    /// The underlying sine-weighted rule.
    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.levels[0].sine
    }

    /// `I(A, B)` by quadrature, doubling the node count until consecutive
    /// levels agree to [`KERNEL_SELF_CHECK`].
    pub fn angular_integral(&self, d_minus: T, d_plus: T) -> Result<T> {
        check_distances(d_minus, d_plus)?;
        let lam = self.lambda.get();
        let tol = T::lit(KERNEL_SELF_CHECK);
        let mut prev = self.levels[0].integrate(lam, d_minus, d_plus);
        let mut cur = self.levels[1].integrate(lam, d_minus, d_plus);
        let mut n = 2 * self.n;
        let mut doublings = 0;
        while (cur - prev).abs() > tol * cur.abs() {
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(LabError::no_conv(
                    "kernel quadrature",
                    format!("n = {n}: successive estimates {prev} and {cur}"),
                ));
            }
            n *= 2;
            prev = cur;
            cur = Level::new(n, lam)?.integrate(lam, d_minus, d_plus);
        }
        if !cur.is_finite() {
            return Err(LabError::NonFinite("kernel quadrature"));
        }
        Ok(cur)
    }
}

fn check_distances<T: Scalar>(d_minus: T, d_plus: T) -> Result<()> {
    if !(d_minus > T::zero()) || !(d_plus >= d_minus) || !d_plus.is_finite() {
        return Err(LabError::invalid(format!(
            "kernel evaluated on its singular set (A−B = {d_minus}, A+B = {d_plus})"
        )));
    }
    Ok(())
}

/// Closed-form `I(A, B)` with the λ-dependent constants precomputed.
///
/// The Gauss series of `F` is summed for `z ≤ ½`; above that the
/// logarithmic continuation around `z = 1` (integer gap `c − a − b = 2`)
/// is summed in `w = 1 − z`.
#[derive(Debug, Clone, Copy)]
pub struct AngularClosedForm<T> {
    lambda: T,
    mass: T,
    polar: T,
    log_coef: T,
    psi0: T,
}

const SERIES_EPS: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 400;

impl<T: Scalar> AngularClosedForm<T> {
    pub fn new(lambda: LambdaParam<T>) -> Self {
        let l = lambda.get();
        let half = T::lit(0.5);
        let c = l + half;
        let g_c = gamma(c);
        let sqrt_pi = T::PI().sqrt();
        // Γ(c) / (Γ(3/2) Γ(λ+1)) and Γ(c) / (Γ(−½) Γ(λ−1)), the latter via 1/Γ(λ−1) = (λ−1)/Γ(λ)
        let polar = g_c / (half * sqrt_pi * gamma(l + T::one()));
        let log_coef = g_c / (-T::lit(2.0) * sqrt_pi) * ((l - T::one()) / gamma(l));
        let euler = T::lit(0.577_215_664_901_532_9);
        let psi0 = half - T::lit(2.0) * T::LN_2() + euler + digamma(l + T::one());
        Self {
            lambda: l,
            mass: sine_power_integral(l),
            polar,
            log_coef,
            psi0,
        }
    }

    /// `∫₀^π (sin β)^{2λ−1} dβ`.
    pub fn sine_mass(&self) -> T {
        self.mass
    }

    #[inline]
    fn hypergeometric(&self, z: T, w: T) -> T {
        let l = self.lambda;
        let one = T::one();
        let eps = T::lit(SERIES_EPS);
        if z <= T::lit(0.5) {
            let (a, b, c) = (-T::lit(0.5), l - one, l + T::lit(0.5));
            let mut f = T::zero();
            let mut term = one;
            for n in 0..SERIES_MAX_TERMS {
                f = f + term;
                let nf = T::from_usize_lossy(n);
                term = term * (a + nf) * (b + nf) / ((c + nf) * (nf + one)) * z;
                if term.abs() <= eps * f.abs() {
                    break;
                }
            }
            return f + term;
        }
        let ab = -T::lit(0.5) * (l - one);
        let head = self.polar * (one - ab * w);
        if self.log_coef == T::zero() {
            return head;
        }
        let lw = w.ln();
        let mut d = lw + self.psi0;
        let mut term = T::lit(0.5);
        let mut s = T::zero();
        for n in 0..SERIES_MAX_TERMS {
            let piece = term * d;
            s = s + piece;
            let nf = T::from_usize_lossy(n);
            if n > 1 && piece.abs() <= eps * s.abs() {
                break;
            }
            term =
                term * (T::lit(1.5) + nf) * (l + one + nf) / ((nf + one) * (nf + T::lit(3.0))) * w;
            d = d - one / (nf + one) - one / (nf + T::lit(3.0))
                + one / (nf + T::lit(1.5))
                + one / (l + nf + one);
        }
        head - w * w * self.log_coef * s
    }

    /// `I(A, B)` from `d_minus = A − B > 0` and `d_plus = A + B`.
    #[inline]
    pub fn eval(&self, d_minus: T, d_plus: T) -> T {
        let sm = d_minus.sqrt();
        let sp = d_plus.sqrt();
        let sum = sp + sm;
        let a = (sp - sm) / sum;
        let z = a * a;
        let w = T::lit(4.0) * sm * sp / (sum * sum);
        let c = sum * sum * T::lit(0.25);
        self.mass * c.powf(T::one() - self.lambda) * self.hypergeometric(z, w) / (d_minus * d_plus)
    }
}

/// `I(A, B)` in closed form, validating the arguments.
pub fn angular_integral_closed<T: Scalar>(
    lambda: LambdaParam<T>,
    d_minus: T,
    d_plus: T,
) -> Result<T> {
    check_distances(d_minus, d_plus)?;
    Ok(AngularClosedForm::new(lambda).eval(d_minus, d_plus))
}

#[inline]
fn halfplane_distances<T: Scalar>(t: T, x: T, y: T) -> (T, T) {
    let t2 = t * t;
    let dm = x - y;
    let dp = x + y;
    (t2 + dm * dm, t2 + dp * dp)
}

#[inline]
pub(crate) fn disk_geometry<T: Scalar>(rho_over_r: T, theta: T, phi: T) -> (T, T) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let t = rho_over_r * ct;
    let x = rho_over_r * st;
    let dt = t - cp;
    let dm = x - sp;
    let dp = x + sp;
    (dt * dt + dm * dm, dt * dt + dp * dp)
}

fn check_halfplane<T: Scalar>(t: T, x: T, y: T) -> Result<()> {
    if !(t > T::zero()) || !(x >= T::zero()) || !(y > T::zero()) {
        return Err(LabError::invalid(format!(
            "half-plane kernel needs t > 0, x >= 0, y > 0 (t={t}, x={x}, y={y})"
        )));
    }
    Ok(())
}

pub(crate) fn check_disk<T: Scalar>(rho_over_r: T) -> Result<()> {
    if !(rho_over_r >= T::zero()) || !(rho_over_r < T::one()) {
        return Err(LabError::invalid(format!(
            "disk kernel needs 0 <= rho/r < 1, got {rho_over_r}"
        )));
    }
    Ok(())
}

/// Half-plane Poisson kernel
/// `(2λ/π) t ∫₀^π (sin θ)^{2λ−1} / (t² + x² + y² − 2xy cos θ)^{λ+1} dθ`
/// through the sine-weighted rule.
pub fn halfplane_kernel<T: Scalar>(t: T, x: T, y: T, quad: &KernelQuadrature<T>) -> Result<T> {
    check_halfplane(t, x, y)?;
    let lam = quad.lambda.get();
    let (dm, dp) = halfplane_distances(t, x, y);
    Ok(T::lit(2.0) * lam * t / T::PI() * quad.angular_integral(dm, dp)?)
}

/// Half-plane kernel from the closed-form angular integral.
pub fn halfplane_kernel_closed<T: Scalar>(t: T, x: T, y: T, lambda: LambdaParam<T>) -> Result<T> {
    check_halfplane(t, x, y)?;
    let lam = lambda.get();
    let (dm, dp) = halfplane_distances(t, x, y);
    Ok(T::lit(2.0) * lam * t / T::PI() * angular_integral_closed(lambda, dm, dp)?)
}

/// Disk Poisson kernel `P(ρ/r, θ, φ)` through the sine-weighted rule.
pub fn disk_kernel<T: Scalar>(
    rho_over_r: T,
    theta: T,
    phi: T,
    quad: &KernelQuadrature<T>,
) -> Result<T> {
    check_disk(rho_over_r)?;
    let lam = quad.lambda.get();
    let (dm, dp) = disk_geometry(rho_over_r, theta, phi);
    let pre = lam * (T::one() - rho_over_r * rho_over_r) / T::PI();
    Ok(pre * quad.angular_integral(dm, dp)?)
}

/// Disk kernel from the closed-form angular integral.
pub fn disk_kernel_closed<T: Scalar>(
    rho_over_r: T,
    theta: T,
    phi: T,
    lambda: LambdaParam<T>,
) -> Result<T> {
    check_disk(rho_over_r)?;
    let lam = lambda.get();
    let (dm, dp) = disk_geometry(rho_over_r, theta, phi);
    let pre = lam * (T::one() - rho_over_r * rho_over_r) / T::PI();
    Ok(pre * angular_integral_closed(lambda, dm, dp)?)
}

/// How extension pipelines evaluate kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ClosedForm,
    Quadrature,
}

/// Kernel evaluator bound to one λ. The closed form is the default in bulk
/// pipelines; the quadrature route is available for cross-checks.
#[derive(Debug, Clone)]
pub struct KernelEvaluator<T> {
    lambda: LambdaParam<T>,
    closed: AngularClosedForm<T>,
    quad: Option<KernelQuadrature<T>>,
}

impl<T: Scalar> KernelEvaluator<T> {
    pub fn new(lambda: LambdaParam<T>, method: KernelMethod) -> Result<Self> {
        let quad = match method {
            KernelMethod::ClosedForm => None,
            KernelMethod::Quadrature => Some(KernelQuadrature::new(KERNEL_NODES, lambda)?),
        };
        Ok(Self {
            lambda,
            closed: AngularClosedForm::new(lambda),
            quad,
        })
    }

    pub fn closed_form(lambda: LambdaParam<T>) -> Self {
        Self {
            lambda,
            closed: AngularClosedForm::new(lambda),
            quad: None,
        }
    }

    pub fn lambda(&self) -> LambdaParam<T> {
        self.lambda
    }

    pub fn method(&self) -> KernelMethod {
        if self.quad.is_some() {
            KernelMethod::Quadrature
        } else {
            KernelMethod::ClosedForm
        }
    }

    #[inline]
    fn angular(&self, dm: T, dp: T) -> Result<T> {
        match &self.quad {
            Some(q) => q.angular_integral(dm, dp),
            None => {
                check_distances(dm, dp)?;
                Ok(self.closed.eval(dm, dp))
            }
        }
    }

    /// Half-plane kernel without argument validation beyond the singular set.
    #[inline]
    pub fn halfplane(&self, t: T, x: T, y: T) -> Result<T> {
        let (dm, dp) = halfplane_distances(t, x, y);
        let lam = self.lambda.get();
        Ok(T::lit(2.0) * lam * t / T::PI() * self.angular(dm, dp)?)
    }

    #[inline]
    pub fn disk(&self, rho_over_r: T, theta: T, phi: T) -> Result<T> {
        check_disk(rho_over_r)?;
        let (dm, dp) = disk_geometry(rho_over_r, theta, phi);
        let lam = self.lambda.get();
        Ok(lam * (T::one() - rho_over_r * rho_over_r) / T::PI() * self.angular(dm, dp)?)
    }
}
