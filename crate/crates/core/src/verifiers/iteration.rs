//! The radius iteration that upgrades the `L²` bound to exponents `p < 2`.
//!
//! With radii `r₀ = r̃`, `r_{j+1} = r_j + (1 − τ) τ^j (r − r̃)`, each step
//! `f(r_j) ≤ ½ f(r_{j+1}) + C₁ m̃_λ(B(r_{j+1} − r_j))^{−1/p} ‖u‖_p`
//! telescopes into a bound whose geometric factor sums to
//! `Σ 2^{−j} τ^{−j(2λ+1)/p} = 1 / (1 − τ^{−(2λ+1)/p}/2)`.

use super::{SweepParams, VerificationReport, ROUNDING_SLACK};
use crate::error::{LabError, Result};
use crate::geometry::LambdaParam;

fn check_inputs(lambda: LambdaParam<f64>, p: f64, tau: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(LabError::invalid(format!(
            "iteration exponent p must lie in (0, 2), got {p}"
        )));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LabError::invalid(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    let e = (2.0 * lambda.get() + 1.0) / p;
    let cond = 2.0 * tau.powf(e);
    if !(cond > 1.0) {
        return Err(LabError::Constraint(format!(
            "iteration series diverges: need 2τ^{{(2λ+1)/p}} > 1, but 2·{tau}^{e} = {cond} (λ = {}, p = {p}, τ = {tau})",
            lambda.get()
        )));
    }
    Ok(e)
}

/// `C = 1 / (1 − τ^{−(2λ+1)/p} / 2)`; requires `2τ^{(2λ+1)/p} > 1`.
pub fn iteration_constant(lambda: LambdaParam<f64>, p: f64, tau: f64) -> Result<f64> {
    let e = check_inputs(lambda, p, tau)?;
    Ok(1.0 / (1.0 - 0.5 * tau.powf(-e)))
}

/// `Σ_{j<terms} 2^{−j} τ^{−j(2λ+1)/p}` summed term by term.
pub fn iteration_partial_sum(
    lambda: LambdaParam<f64>,
    p: f64,
    tau: f64,
    terms: usize,
) -> Result<f64> {
    let e = check_inputs(lambda, p, tau)?;
    let q = 0.5 * tau.powf(-e);
    let mut term = 1.0;
    let mut acc = 0.0;
    for _ in 0..terms {
        acc += term;
        term *= q;
    }
    Ok(acc)
}

/// The `τ` with `2τ^{(2λ+1)/p} = 3/2`, so that `C = 3`.
pub fn default_tau(lambda: LambdaParam<f64>, p: f64) -> f64 {
    0.75f64.powf(p / (2.0 * lambda.get() + 1.0))
}

/// Measured data for [`iteration_demo`] on one ball `B(c, R)`.
pub struct IterationInput<'a> {
    /// `r ↦ sup_{B(c, r)} |u|` for `r ∈ [R, 2R]`.
    pub sup_on_ball: &'a dyn Fn(f64) -> Result<f64>,
    /// `ρ ↦ m̃_λ(B(c, ρ))`.
    pub measure: &'a dyn Fn(f64) -> Result<f64>,
    /// `‖u‖_{L^p(B(c, 2R), dm̃_λ)}`.
    pub lp_norm: f64,
    pub radius: f64,
}

/// Runs `steps` steps of the recursion from `r̃ = R` to `r = 2R` with the
/// measured `f(r) = sup_{B(c,r)} |u|`.
///
/// `C₁` is the smallest constant making every step inequality hold on the
/// measured data; the `k`-step bound `2^{−k} f(r_k) + C₁ Σ 2^{−j} c_j` must
/// then dominate `f(R)`. Also reported: the closed form
/// `C₁ C ‖u‖_p / m̃_λ(B((1 − τ)R))^{1/p}` and the empirical constant
/// `f(R) m̃_λ(B(R))^{1/p} / ‖u‖_p`.
pub fn iteration_demo(
    input: &IterationInput<'_>,
    lambda: LambdaParam<f64>,
    p: f64,
    tau: f64,
    steps: usize,
) -> Result<VerificationReport> {
    let c_iter = iteration_constant(lambda, p, tau)?;
    if steps == 0 {
        return Err(LabError::invalid("iteration demo needs at least one step"));
    }
    let r_tilde = input.radius;
    let span = input.radius;
    let mut radii = vec![r_tilde];
    for j in 0..steps {
        let last = radii[j];
        radii.push(last + (1.0 - tau) * tau.powi(j as i32) * span);
    }
    let f = radii
        .iter()
        .map(|&r| (input.sup_on_ball)(r))
        .collect::<Result<Vec<f64>>>()?;
    let c = (0..steps)
        .map(|j| Ok(input.lp_norm / (input.measure)(radii[j + 1] - radii[j])?.powf(1.0 / p)))
        .collect::<Result<Vec<f64>>>()?;
    let c1 = (0..steps)
        .map(|j| (f[j] - 0.5 * f[j + 1]).max(0.0) / c[j])
        .fold(0.0, f64::max);
    let mut weight = 1.0;
    let mut sum = 0.0;
    for cj in &c {
        sum += weight * cj;
        weight *= 0.5;
    }
    let bound = 0.5f64.powi(steps as i32) * f[steps] + c1 * sum;
    let closed = c1 * c_iter * input.lp_norm / (input.measure)((1.0 - tau) * span)?.powf(1.0 / p);
    let empirical = f[0] * (input.measure)(r_tilde)?.powf(1.0 / p) / input.lp_norm;
    let params = SweepParams {
        p: Some(p),
        tau: Some(tau),
        ..SweepParams::new(lambda.get())
    };
    let mut report = VerificationReport::new("iteration", "", params, f[0], bound, steps as f64)
        .with_extra("gap", bound - f[0])
        .with_extra("step_constant", c1)
        .with_extra("iteration_constant", c_iter)
        .with_extra("closed_form_bound", closed)
        .with_extra("empirical_constant", empirical)
        .with_extra("outer_radius", radii[steps]);
    if bound - f[0] < -ROUNDING_SLACK * bound {
        report.fail("negative_recursion_gap");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(l: f64) -> LambdaParam<f64> {
        LambdaParam::new(l).unwrap()
    }

    #[test]
    fn constant_examples() {
        let c = iteration_constant(lam(1.0), 1.0, 0.9).unwrap();
        assert!((c - 3.1834).abs() < 1e-4);
        let near_one = iteration_constant(lam(1.0), 1.0, 1.0 - 1e-9).unwrap();
        assert!((near_one - 2.0).abs() < 1e-7);
        let err = iteration_constant(lam(1.0), 1.0, 0.5).unwrap_err();
        assert!(matches!(err, LabError::Constraint(_)));
        assert!(err.to_string().contains("2τ^{(2λ+1)/p} > 1"));
        assert!(iteration_constant(lam(1.0), 2.5, 0.9).is_err());
    }

    #[test]
    fn default_tau_gives_three() {
        for (l, p) in [(0.3, 0.5), (1.0, 1.0), (2.0, 0.5), (2.0, 1.5)] {
            let tau = default_tau(lam(l), p);
            assert!((iteration_constant(lam(l), p, tau).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_long_partial_sums() {
        for (l, p) in [(0.3, 0.5), (1.0, 1.0), (2.0, 1.5)] {
            for q in [0.55, 0.8] {
                let tau = (2.0f64 * q).powf(-p / (2.0 * l + 1.0));
                let c = iteration_constant(lam(l), p, tau).unwrap();
                let s = iteration_partial_sum(lam(l), p, tau, 200).unwrap();
                assert!((c - s).abs() < 1e-12 * c, "{l} {p} {q}");
            }
        }
    }

    #[test]
    fn constant_function_demo() {
        let sup = |_: f64| Ok(2.0);
        let measure = |r: f64| Ok(std::f64::consts::PI * r * r);
        let lp = 2.0 * (std::f64::consts::PI * 4.0f64).powf(1.0);
        let input = IterationInput {
            sup_on_ball: &sup,
            measure: &measure,
            lp_norm: lp,
            radius: 1.0,
        };
        let r = iteration_demo(&input, lam(1.0), 1.0, 0.9, 30).unwrap();
        assert!(r.status.passed);
        assert!(r.extra["gap"] >= 0.0);
        assert!((r.extra["outer_radius"] - (2.0 - 0.9f64.powi(30))).abs() < 1e-12);
    }
}
