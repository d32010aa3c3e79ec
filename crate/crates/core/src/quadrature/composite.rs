use crate::error::{LabError, Result};
use crate::scalar::Scalar;

use super::{gauss_legendre, QuadratureRule};

/// Reference rules on `[-1, 1]` reused across many panels.
#[derive(Debug, Clone)]
pub struct PanelRules<T> {
    pub low: QuadratureRule<T>,
    pub high: QuadratureRule<T>,
}

impl<T: Scalar> PanelRules<T> {
    pub fn new(low: usize, high: usize) -> Result<Self> {
        Ok(Self {
            low: gauss_legendre(low, -T::one(), T::one())?,
            high: gauss_legendre(high, -T::one(), T::one())?,
        })
    }
}

/// `∫_a^b f` with a reference rule on `[-1, 1]` that carries no weight.
#[inline]
pub fn panel_sum<T: Scalar, F: FnMut(T) -> T>(base: &QuadratureRule<T>, a: T, b: T, mut f: F) -> T {
    let half = (b - a) * T::lit(0.5);
    let mid = (b + a) * T::lit(0.5);
    let mut acc = T::zero();
    for (&x, &w) in base.nodes().iter().zip(base.weights()) {
        acc = acc + w * f(mid + half * x);
    }
    acc * half
}

/// Composite rule over consecutive breakpoints.
pub fn integrate_panels<T: Scalar, F: FnMut(T) -> T>(
    base: &QuadratureRule<T>,
    breaks: &[T],
    mut f: F,
) -> T {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .fold(T::zero(), |acc, w| {
            acc + panel_sum(base, w[0], w[1], &mut f)
        })
}

/// `∫_a^b (s − a)^γ f(s) ds` with a `gauss_jacobi(n, 0, γ)` reference rule.
pub fn jacobi_left_panel<T: Scalar, F: FnMut(T) -> T>(
    jac: &QuadratureRule<T>,
    a: T,
    b: T,
    mut f: F,
) -> T {
    let gamma = jac.weight_exponent();
    let half = (b - a) * T::lit(0.5);
    let mid = (b + a) * T::lit(0.5);
    let mut acc = T::zero();
    for (&x, &w) in jac.nodes().iter().zip(jac.weights()) {
        acc = acc + w * f(mid + half * x);
    }
    acc * half.powf(T::one() + gamma)
}

/// `∫_a^b (b − s)^γ f(s) ds` with a `gauss_jacobi(n, γ, 0)` reference rule.
pub fn jacobi_right_panel<T: Scalar, F: FnMut(T) -> T>(
    jac: &QuadratureRule<T>,
    a: T,
    b: T,
    f: F,
) -> T {
    jacobi_left_panel(jac, a, b, f)
}

/// Adaptive bisection with a 10-point Gauss–Legendre base rule. Accepts a
/// panel when the two-halves estimate agrees with the whole-panel estimate
/// to within the panel's share of `tol_abs`.
pub fn adaptive_gauss<T: Scalar, F: FnMut(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol_abs: T,
    max_depth: usize,
) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let base = gauss_legendre(10, -T::one(), T::one())?;
    let mut f = f;
    let whole = panel_sum(&base, a, b, &mut f);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total = T::zero();
    let len = b - a;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = (lo + hi) * T::lit(0.5);
        let left = panel_sum(&base, lo, mid, &mut f);
        let right = panel_sum(&base, mid, hi, &mut f);
        let refined = left + right;
        if !refined.is_finite() {
            return Err(LabError::NonFinite("adaptive quadrature"));
        }
        let share = tol_abs * (hi - lo) / len;
        if (refined - est).abs() <= share || (hi - lo) <= T::epsilon() * len {
            total = total + refined;
        } else if depth >= max_depth {
            return Err(LabError::no_conv(
                "adaptive quadrature",
                format!("depth {max_depth} reached on [{lo}, {hi}]"),
            ));
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_jacobi;

    #[test]
    fn composite_recovers_polynomial() {
        let base = gauss_legendre(4, -1.0f64, 1.0).unwrap();
        let v = integrate_panels(&base, &[0.0, 0.3, 1.0, 2.0], |x| x.powi(5));
        assert!((v - 64.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn left_weighted_panel() {
        let jac = gauss_jacobi(8, 0.0f64, 0.4).unwrap();
        // ∫_1^3 (s-1)^0.4 ds = 2^1.4 / 1.4
        let v = jacobi_left_panel(&jac, 1.0, 3.0, |_| 1.0);
        assert!((v - 2f64.powf(1.4) / 1.4).abs() < 1e-14);
        let jr = gauss_jacobi(8, 0.4f64, 0.0).unwrap();
        let v = jacobi_right_panel(&jr, 1.0, 3.0, |s| s);
        // ∫_1^3 (3-s)^0.4 s ds, u = 3 - s: ∫_0^2 u^0.4 (3-u) du
        let expect = 3.0 * 2f64.powf(1.4) / 1.4 - 2f64.powf(2.4) / 2.4;
        assert!((v - expect).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let v = adaptive_gauss(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 60).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_reports_stall() {
        let r = adaptive_gauss(
            |x: f64| if x < 1.0 / 3.0 { 0.0 } else { 1.0 },
            0.0,
            1.0,
            1e-30,
            5,
        );
        assert!(matches!(r, Err(LabError::NonConvergence { .. })));
    }
}
