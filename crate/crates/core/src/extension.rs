//! λ-harmonic extensions: the half-plane Poisson semigroup `P_t f` and the
//! disk representation from boundary values on a half-circle.

use rayon::prelude::*;

use crate::boundary::BoundaryFunction;
use crate::error::{LabError, Result};
use crate::geometry::LambdaParam;
use crate::grid::{HarmonicGrid, Provenance};
use crate::kernel::{check_disk, disk_geometry, AngularClosedForm, KernelEvaluator, KernelMethod};
use crate::quadrature::{
    gauss_jacobi, gauss_legendre, jacobi_left_panel, panel_sum, QuadratureRule,
};
use crate::scalar::Scalar;

/// Gauss–Legendre nodes per panel of the `y`-integral.
pub const EXTENSION_PANEL_NODES: usize = 16;
/// Relative `n` vs `2n` disagreement that flags an under-resolved disk integral.
pub const DISK_RESOLUTION_TOL: f64 = 1e-10;
/// Allowed spread of the measured disk normalization over the probe set.
pub const CALIBRATION_SPREAD_TOL: f64 = 1e-6;
const MAX_GRADING_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionOptions {
    pub method: KernelMethod,
    pub panel_nodes: usize,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self {
            method: KernelMethod::ClosedForm,
            panel_nodes: EXTENSION_PANEL_NODES,
        }
    }
}

/// Cut points of `[a, b]` graded geometrically around `c` with first step `d`,
/// together with the interior `extra` points, sorted and deduplicated.
/// A grading cut that would leave an end panel much shorter than its
/// neighbour is dropped, so no interior panel ends close to `a` or `b`
/// (where endpoint weights have branch points).
fn graded_cuts<T: Scalar>(a: T, b: T, c: T, d: T, extra: &[T]) -> Vec<T> {
    // (position, removable)
    let mut cuts = vec![(a, false), (b, false)];
    let inside = |v: T| v > a && v < b;
    cuts.extend(
        extra
            .iter()
            .copied()
            .filter(|&v| inside(v))
            .map(|v| (v, false)),
    );
    if inside(c) {
        cuts.push((c, true));
    }
    let mut step = d;
    for _ in 0..MAX_GRADING_STEPS {
        let (lo, hi) = (c - step, c + step);
        if lo <= a && hi >= b {
            break;
        }
        if inside(lo) {
            cuts.push((lo, true));
        }
        if inside(hi) {
            cuts.push((hi, true));
        }
        step = step * T::lit(2.0);
    }
    cuts.sort_by(|p, q| {
        p.0.partial_cmp(&q.0)
            .expect("finite cut points")
            .then(q.1.cmp(&p.1))
    });
    let min_gap = T::epsilon() * T::lit(64.0) * (b - a).max(T::one());
    cuts.dedup_by(|q, p| {
        let dup = q.0 - p.0 <= min_gap;
        if dup {
            p.1 = p.1 && q.1;
        }
        dup
    });
    let quarter = T::lit(0.25);
    while cuts.len() > 2 && cuts[1].1 && cuts[1].0 - cuts[0].0 < quarter * (cuts[2].0 - cuts[1].0) {
        cuts.remove(1);
    }
    while cuts.len() > 2 {
        let n = cuts.len();
        if cuts[n - 2].1
            && cuts[n - 1].0 - cuts[n - 2].0 < quarter * (cuts[n - 2].0 - cuts[n - 3].0)
        {
            cuts.remove(n - 2);
        } else {
            break;
        }
    }
    let mut out: Vec<T> = cuts.into_iter().map(|p| p.0).collect();
    if let Some(last) = out.last_mut() {
        *last = b;
    }
    out
}

/// Evaluates `P_t g(x) = ∫₀^∞ K(t, x, y) g(y) y^{2λ} dy` for data `g`
/// supported in a bounded interval.
///
/// The `y`-integral is split at the support ends, at the caller's
/// breakpoints, and at `x ± t·2^k`, so every panel sees the kernel's peak at
/// a distance comparable to its own length. A support touching the origin
/// gets a Gauss–Jacobi panel carrying `y^{2λ}`.
#[derive(Debug, Clone)]
pub struct PoissonExtender<T> {
    kernel: KernelEvaluator<T>,
    panel: QuadratureRule<T>,
    axis: QuadratureRule<T>,
}

impl<T: Scalar> PoissonExtender<T> {
    pub fn new(lambda: LambdaParam<T>, opts: ExtensionOptions) -> Result<Self> {
        Ok(Self {
            kernel: KernelEvaluator::new(lambda, opts.method)?,
            panel: gauss_legendre(opts.panel_nodes, -T::one(), T::one())?,
            axis: gauss_jacobi(opts.panel_nodes, T::zero(), lambda.weight_exponent())?,
        })
    }

    pub fn lambda(&self) -> LambdaParam<T> {
        self.kernel.lambda()
    }

    pub fn kernel(&self) -> &KernelEvaluator<T> {
        &self.kernel
    }

    /// `P_t g(x)` for `g` vanishing outside `support` and smooth between
    /// consecutive `breaks`.
    pub fn apply<G: Fn(T) -> T>(
        &self,
        t: T,
        x: T,
        g: G,
        support: (T, T),
        breaks: &[T],
    ) -> Result<T> {
        if !(t > T::zero()) || !(x >= T::zero()) {
            return Err(LabError::invalid(format!(
                "extension needs t > 0 and x >= 0 (t={t}, x={x})"
            )));
        }
        let (a, b) = support;
        if !(a >= T::zero()) || !(b > a) || !b.is_finite() {
            return Err(LabError::invalid(format!(
                "extension support must satisfy 0 <= a < b < inf, got ({a}, {b})"
            )));
        }
        let two_lambda = self.lambda().weight_exponent();
        let cuts = graded_cuts(a, b, x, t, breaks);
        let mut total = T::zero();
        let mut err = None;
        let mut k = |y: T| match self.kernel.halfplane(t, x, y) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                T::zero()
            }
        };
        for (i, w) in cuts.windows(2).enumerate() {
            let (lo, hi) = (w[0], w[1]);
            total = total
                + if i == 0 && lo == T::zero() {
                    jacobi_left_panel(&self.axis, lo, hi, |y| k(y) * g(y))
                } else {
                    panel_sum(&self.panel, lo, hi, |y| k(y) * g(y) * y.powf(two_lambda))
                };
        }
        if let Some(e) = err {
            return Err(e);
        }
        if !total.is_finite() {
            return Err(LabError::NonFinite("poisson extension"));
        }
        Ok(total)
    }

    /// `P_t f(x)`.
    pub fn value(&self, f: &BoundaryFunction<T>, t: T, x: T) -> Result<T> {
        let mut breaks = f.breakpoints();
        breaks.extend(f.jumps());
        let raw = self.apply(t, x, |y| f.rule_value(y), f.support(), &breaks)?;
        Ok(f.scale() * raw)
    }

    /// `P_t f` on a tensor lattice, rows evaluated in parallel.
    pub fn extend(
        &self,
        f: &BoundaryFunction<T>,
        t_nodes: &[T],
        x_nodes: &[T],
    ) -> Result<HarmonicGrid<T>> {
        let rows: Vec<Vec<T>> = t_nodes
            .par_iter()
            .map(|&t| {
                x_nodes
                    .iter()
                    .map(|&x| self.value(f, t, x))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<_>>()?;
        let flat: Vec<T> = rows.into_iter().flatten().collect();
        let values = ndarray::Array2::from_shape_vec((t_nodes.len(), x_nodes.len()), flat)
            .map_err(|e| LabError::invalid(e.to_string()))?;
        HarmonicGrid::new(
            t_nodes.to_vec(),
            x_nodes.to_vec(),
            values,
            self.lambda(),
            Provenance::PoissonExtension,
        )
    }
}

/// `P_t f` on a lattice with the default options.
pub fn poisson_extend<T: Scalar>(
    f: &BoundaryFunction<T>,
    t_nodes: &[T],
    x_nodes: &[T],
    lambda: LambdaParam<T>,
) -> Result<HarmonicGrid<T>> {
    PoissonExtender::new(lambda, ExtensionOptions::default())?.extend(f, t_nodes, x_nodes)
}

#[derive(Debug, Clone)]
struct DiskLevel<T> {
    panel: QuadratureRule<T>,
    left: QuadratureRule<T>,
    right: QuadratureRule<T>,
}

impl<T: Scalar> DiskLevel<T> {
    fn new(n: usize, two_lambda: T) -> Result<Self> {
        Ok(Self {
            panel: gauss_legendre(n, -T::one(), T::one())?,
            left: gauss_jacobi(n, T::zero(), two_lambda)?,
            right: gauss_jacobi(n, two_lambda, T::zero())?,
        })
    }
}

/// Measured normalization `∫₀^π P (sin φ)^{2λ} dφ` over a probe set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Calibration {
    pub constant: f64,
    pub spread: f64,
    pub probes: usize,
}

/// The disk representation
/// `u(ρ, θ) = ∫₀^π P(ρ/r, θ, φ) u(r cos φ, r sin φ) (sin φ)^{2λ} dφ`
/// in polar coordinates about a point of the axis.
#[derive(Debug, Clone)]
pub struct DiskExtender<T> {
    lambda: LambdaParam<T>,
    closed: AngularClosedForm<T>,
    levels: [DiskLevel<T>; 2],
    normalization: T,
    tol: T,
}

impl<T: Scalar> DiskExtender<T> {
    pub fn new(lambda: LambdaParam<T>, panel_nodes: usize) -> Result<Self> {
        let e = lambda.weight_exponent();
        Ok(Self {
            lambda,
            closed: AngularClosedForm::new(lambda),
            levels: [
                DiskLevel::new(panel_nodes, e)?,
                DiskLevel::new(2 * panel_nodes, e)?,
            ],
            normalization: T::one(),
            tol: T::lit(DISK_RESOLUTION_TOL),
        })
    }

    pub fn lambda(&self) -> LambdaParam<T> {
        self.lambda
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    /// Disk kernel `P(ρ/r, θ, φ)` in closed form.
    #[inline]
    pub fn kernel(&self, rho_over_r: T, theta: T, phi: T) -> T {
        let (dm, dp) = disk_geometry(rho_over_r, theta, phi);
        let l = self.lambda.get();
        l * (T::one() - rho_over_r * rho_over_r) / T::PI() * self.closed.eval(dm, dp)
    }

    fn level_integral<G: Fn(T) -> T>(&self, level: &DiskLevel<T>, rho: T, theta: T, g: &G) -> T {
        let pi = T::PI();
        let two_lambda = self.lambda.weight_exponent();
        let d = (T::one() - rho).max(T::lit(1e-6));
        let cuts = graded_cuts(T::zero(), pi, theta, d, &[pi * T::lit(0.5)]);
        let last = cuts.len() - 2;
        let mut total = T::zero();
        for (i, w) in cuts.windows(2).enumerate() {
            let (lo, hi) = (w[0], w[1]);
            let body = |phi: T| self.kernel(rho, theta, phi) * g(phi);
            total = total
                + if i == 0 {
                    jacobi_left_panel(&level.left, lo, hi, |phi| {
                        body(phi) * (phi.sin() / phi).powf(two_lambda)
                    })
                } else if i == last {
                    jacobi_left_panel(&level.right, lo, hi, |phi| {
                        body(phi) * (phi.sin() / (pi - phi)).powf(two_lambda)
                    })
                } else {
                    panel_sum(&level.panel, lo, hi, |phi| {
                        body(phi) * phi.sin().powf(two_lambda)
                    })
                };
        }
        total
    }

    fn raw(&self, g: &impl Fn(T) -> T, rho: T, theta: T) -> Result<T> {
        check_disk(rho)?;
        if !(theta >= T::zero()) || !(theta <= T::PI()) {
            return Err(LabError::invalid(format!(
                "disk angle must lie in [0, pi], got {theta}"
            )));
        }
        let coarse = self.level_integral(&self.levels[0], rho, theta, g);
        let fine = self.level_integral(&self.levels[1], rho, theta, g);
        if !fine.is_finite() {
            return Err(LabError::NonFinite("disk extension"));
        }
        if (fine - coarse).abs() > self.tol * (T::one() + fine.abs()) {
            return Err(LabError::no_conv(
                "disk boundary sampling",
                format!("under-resolved at rho/r={rho}, theta={theta}: {coarse} vs {fine}"),
            ));
        }
        Ok(fine)
    }

    /// `u` at `(ρ/r, θ)` from boundary values `g(φ) = u(r cos φ, r sin φ)`,
    /// divided by the calibrated normalization.
    pub fn value<G: Fn(T) -> T>(&self, g: G, rho_over_r: T, theta: T) -> Result<T> {
        Ok(self.raw(&g, rho_over_r, theta)? / self.normalization)
    }

    /// Measures the normalization on `probes` and stores it when it is the
    /// same constant everywhere.
    pub fn calibrate(&mut self, probes: &[(T, T)]) -> Result<Calibration> {
        let one = |_: T| T::one();
        let values = probes
            .iter()
            .map(|&(rho, theta)| self.raw(&one, rho, theta))
            .collect::<Result<Vec<T>>>()?;
        if values.is_empty() {
            return Err(LabError::invalid("calibration needs at least one probe"));
        }
        let mean = values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len());
        let spread = values
            .iter()
            .fold(T::zero(), |m, &v| m.max((v - mean).abs()))
            / mean;
        if spread > T::lit(CALIBRATION_SPREAD_TOL) {
            return Err(LabError::Constraint(format!(
                "disk kernel normalization depends on the point (relative spread {spread})"
            )));
        }
        self.normalization = mean;
        Ok(Calibration {
            constant: mean.as_f64(),
            spread: spread.as_f64(),
            probes: values.len(),
        })
    }

    /// Default probe set: a polar lattice of radii up to `0.95` and angles across `(0, π)`.
    pub fn default_probes() -> Vec<(T, T)> {
        let mut out = Vec::new();
        for &rho in &[0.0, 0.3, 0.6, 0.9, 0.95] {
            for k in 0..5 {
                let theta = T::PI() * T::lit((k as f64 + 0.5) / 5.0);
                out.push((T::lit(rho), theta));
            }
        }
        out
    }

    /// `u(t, x)` inside the half-disk of radius `r` about `(t_c, 0)` from
    /// `u` itself on the half-circle.
    pub fn value_at<U: Fn(T, T) -> T>(&self, u: U, t_c: T, r: T, t: T, x: T) -> Result<T> {
        let dt = t - t_c;
        let rho = (dt * dt + x * x).sqrt() / r;
        let theta = x.atan2(dt);
        self.value(|phi| u(t_c + r * phi.cos(), r * phi.sin()), rho, theta)
    }

    /// The representation on a lattice inside the half-disk.
    pub fn extend_grid<U: Fn(T, T) -> T + Sync>(
        &self,
        u: U,
        t_c: T,
        r: T,
        t_nodes: &[T],
        x_nodes: &[T],
    ) -> Result<HarmonicGrid<T>> {
        let rows: Vec<Vec<T>> = t_nodes
            .par_iter()
            .map(|&t| {
                x_nodes
                    .iter()
                    .map(|&x| self.value_at(&u, t_c, r, t, x))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<_>>()?;
        let flat: Vec<T> = rows.into_iter().flatten().collect();
        let values = ndarray::Array2::from_shape_vec((t_nodes.len(), x_nodes.len()), flat)
            .map_err(|e| LabError::invalid(e.to_string()))?;
        HarmonicGrid::new(
            t_nodes.to_vec(),
            x_nodes.to_vec(),
            values,
            self.lambda,
            Provenance::DiskExtension,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gauss;

    fn lam(l: f64) -> LambdaParam<f64> {
        LambdaParam::new(l).unwrap()
    }

    #[test]
    fn cuts_are_graded_and_sorted() {
        let c: Vec<f64> = graded_cuts(0.0, 10.0, 3.0, 0.1, &[5.0, 12.0]);
        assert_eq!(c[0], 0.0);
        assert_eq!(*c.last().unwrap(), 10.0);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert!(c.contains(&3.0) && c.contains(&5.0));
        assert!(c.iter().any(|&v| (v - 3.1).abs() < 1e-15));
    }

    #[test]
    fn no_sliver_end_panels() {
        let c: Vec<f64> = graded_cuts(0.0, std::f64::consts::PI, 0.314, 0.7, &[1.5]);
        assert!(c[1] - c[0] >= 0.25 * (c[2] - c[1]));
        let n = c.len();
        assert!(c[n - 1] - c[n - 2] >= 0.25 * (c[n - 2] - c[n - 3]));
        // data breakpoints survive even when close to an end
        let c: Vec<f64> = graded_cuts(0.0, 1.0, 0.5, 0.01, &[0.999]);
        assert!(c.contains(&0.999));
    }

    #[test]
    fn matches_adaptive_reference() {
        // independent route: adaptive bisection on the raw integrand
        for &l in &[0.3, 1.0, 2.0] {
            let ext = PoissonExtender::new(lam(l), ExtensionOptions::default()).unwrap();
            let f = BoundaryFunction::tent(1.0, 3.0).unwrap();
            for &(t, x) in &[(0.05, 2.0), (0.5, 0.0), (1.0, 4.0), (0.2, 1.0)] {
                let a = ext.value(&f, t, x).unwrap();
                let integrand =
                    |y: f64| ext.kernel().halfplane(t, x, y).unwrap() * f.eval(y) * y.powf(2.0 * l);
                let b = adaptive_gauss(integrand, 1.0, 2.0, 1e-13, 60).unwrap()
                    + adaptive_gauss(integrand, 2.0, 3.0, 1e-13, 60).unwrap();
                assert!((a - b).abs() < 1e-11, "λ={l} ({t},{x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_on_large_domain_is_conserved() {
        for &l in &[0.3, 1.0, 2.0] {
            let ext = PoissonExtender::new(lam(l), ExtensionOptions::default()).unwrap();
            let f = BoundaryFunction::constant(1.0, 0.0, 1e9).unwrap();
            for &(t, x) in &[(0.1, 0.0), (1.0, 1.0), (0.3, 5.0)] {
                let u = ext.value(&f, t, x).unwrap();
                assert!((u - 1.0).abs() < 1e-7, "λ={l}: {u}");
            }
        }
    }

    #[test]
    fn homogeneous_in_f() {
        let ext = PoissonExtender::new(lam(1.0), ExtensionOptions::default()).unwrap();
        let f = BoundaryFunction::indicator(1.0, 2.0).unwrap();
        let a = ext.value(&f, 0.4, 1.3).unwrap();
        let b = ext.value(&f.scaled(3.0), 0.4, 1.3).unwrap();
        assert_eq!(b, 3.0 * a);
    }

    #[test]
    fn disk_kernel_normalized_and_reproduces_constants() {
        for &l in &[0.3, 1.0, 2.0] {
            let mut d = DiskExtender::new(lam(l), 16).unwrap();
            let cal = d.calibrate(&DiskExtender::default_probes()).unwrap();
            assert!((cal.constant - 1.0).abs() < 1e-9, "λ={l}: {cal:?}");
            assert!((d.value(|_| 2.5, 0.7, 1.0).unwrap() - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn disk_rejects_outside_points() {
        let d = DiskExtender::new(lam(1.0), 16).unwrap();
        assert!(d.value(|_| 1.0, 1.0, 0.5).is_err());
        assert!(d.value(|_| 1.0, 0.5, 4.0).is_err());
    }

    #[test]
    fn disk_flags_underresolved_boundary() {
        let d = DiskExtender::new(lam(1.0), 4).unwrap();
        let r = d.value(|phi| (40.0 * phi).sin(), 0.5, 1.0);
        assert!(matches!(r, Err(LabError::NonConvergence { .. })));
    }
}
