//! Convergence and reproduction studies of the solvers themselves.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::boundary::BoundaryFunction;
use crate::error::{LabError, Result};
use crate::extension::{Calibration, DiskExtender, PoissonExtender};
use crate::fd_oracle::{fd_solve, maximum_principle_excess, RectangleProblem, FD_SOLVER_TOL};
use crate::geometry::LambdaParam;
use crate::grid::{uniform_nodes, HarmonicGrid, Provenance};
use crate::residual::residual_bessel_laplace;

use super::kernel_sup;

/// Cells per unit length of the three harmonicity levels.
pub const HARMONICITY_LEVELS: [usize; 3] = [16, 32, 64];
/// The rectangle `[0.5, 1.5] × [0.25, 3.25]` checked for harmonicity.
pub const HARMONICITY_BOX: ((f64, f64), (f64, f64)) = ((0.5, 1.5), (0.25, 3.25));

fn log2_ratios(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicityStudy {
    pub lambda: f64,
    pub resolutions: Vec<usize>,
    /// Max residual on the interior nodes of the coarsest lattice.
    pub max_residuals: Vec<f64>,
    pub orders: Vec<f64>,
    /// `h² max|res| / max|u|` on the finest lattice.
    pub scaled_finest: f64,
}

impl HarmonicityStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Discrete Bessel Laplacian of the extension of `f` over three dyadic
/// lattices. The residual is the stencil truncation error, so it decays
/// like `h²`.
pub fn harmonicity_study(
    ext: &PoissonExtender<f64>,
    f: &BoundaryFunction<f64>,
) -> Result<HarmonicityStudy> {
    let ((t0, t1), (x0, x1)) = HARMONICITY_BOX;
    let coarse = HARMONICITY_LEVELS[0];
    let mut max_residuals = Vec::new();
    let mut scaled_finest = f64::NAN;
    for &n in &HARMONICITY_LEVELS {
        let ts = uniform_nodes(t0, t1, n + 1);
        let xs = uniform_nodes(x0, x1, 3 * n + 1);
        let g = ext.extend(f, &ts, &xs)?;
        let r = residual_bessel_laplace(&g)?;
        let mut worst = 0.0f64;
        for i in 1..coarse {
            for j in 1..3 * coarse {
                let (t, x) = (t0 + i as f64 / coarse as f64, x0 + j as f64 / coarse as f64);
                let v = r
                    .at(t, x)
                    .ok_or_else(|| LabError::invalid("harmonicity lattices are not nested"))?;
                worst = worst.max(v.abs());
            }
        }
        max_residuals.push(worst);
        scaled_finest = r.scaled_max(g.max_abs());
    }
    Ok(HarmonicityStudy {
        lambda: ext.lambda().get(),
        resolutions: HARMONICITY_LEVELS.to_vec(),
        orders: log2_ratios(&max_residuals),
        max_residuals,
        scaled_finest,
    })
}

type Solution = Box<dyn Fn(f64, f64) -> f64>;

/// The polynomial solutions `t`, `(1+2λ)t² − x²` and `t³ − 3tx²/(1+2λ)`.
pub fn analytic_solutions(lambda: f64) -> Vec<(&'static str, Solution)> {
    let c = 1.0 + 2.0 * lambda;
    vec![
        ("linear", Box::new(|t, _| t)),
        ("quadratic", Box::new(move |t, x| c * t * t - x * x)),
        (
            "cubic",
            Box::new(move |t, x| t * t * t - 3.0 * t * x * x / c),
        ),
    ]
}

/// Max discrete residual of each polynomial solution on the given lattice.
pub fn analytic_residuals(
    lambda: LambdaParam<f64>,
    t_nodes: &[f64],
    x_nodes: &[f64],
) -> Result<Vec<(&'static str, f64)>> {
    analytic_solutions(lambda.get())
        .into_iter()
        .map(|(name, u)| {
            let g = HarmonicGrid::from_fn(
                t_nodes.to_vec(),
                x_nodes.to_vec(),
                lambda,
                Provenance::Analytic,
                u,
            )?;
            Ok((name, residual_bessel_laplace(&g)?.max_abs()))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DiskStudy {
    pub lambda: f64,
    pub calibration: Calibration,
    pub points: usize,
    pub max_error: f64,
}

/// Reproduces `(1+2λ)t² − x²` inside the half-disk of radius 1 about
/// `(t_c, 0)` from its values on the half-circle, at `points` seeded random
/// points with `ρ/r ≤ 0.9`.
pub fn disk_reproduction(
    lambda: LambdaParam<f64>,
    t_c: f64,
    points: usize,
    seed: u64,
) -> Result<DiskStudy> {
    let mut disk = DiskExtender::new(lambda, 16)?;
    let calibration = disk.calibrate(&DiskExtender::default_probes())?;
    let c = 1.0 + 2.0 * lambda.get();
    let u = move |t: f64, x: f64| c * (t * t) - x * x;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut max_error = 0.0f64;
    for _ in 0..points {
        let rho: f64 = 0.9 * rng.random::<f64>();
        let theta: f64 = std::f64::consts::PI * rng.random::<f64>();
        let (t, x) = (t_c + rho * theta.cos(), rho * theta.sin());
        let v = disk.value_at(u, t_c, 1.0, t, x)?;
        max_error = max_error.max((v - u(t, x)).abs());
    }
    Ok(DiskStudy {
        lambda: lambda.get(),
        calibration,
        points,
        max_error,
    })
}

/// Values of `1 − ρ/r` used to fit the kernel sup exponent.
pub const KERNEL_GAPS: [f64; 3] = [0.5, 0.1, 0.01];

#[derive(Debug, Clone, Serialize)]
pub struct KernelExponentFit {
    pub lambda: f64,
    pub gaps: Vec<f64>,
    pub sups: Vec<f64>,
    /// `−slope` of the least-squares line through `(log gap, log sup)`.
    pub exponent: f64,
}

pub fn kernel_sup_exponent(lambda: LambdaParam<f64>) -> Result<KernelExponentFit> {
    let mut disk = DiskExtender::new(lambda, 16)?;
    disk.calibrate(&DiskExtender::default_probes())?;
    let sups = KERNEL_GAPS
        .iter()
        .map(|&g| kernel_sup(&disk, 1.0 - g))
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = KERNEL_GAPS.iter().map(|g| g.ln()).collect();
    let ys: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(KernelExponentFit {
        lambda: lambda.get(),
        gaps: KERNEL_GAPS.to_vec(),
        sups,
        exponent: -sxy / sxx,
    })
}

/// Spacings of the finite-difference cross-check.
pub const ORACLE_SPACINGS: [f64; 4] = [0.125, 0.0625, 0.03125, 0.015625];
/// The rectangle of the cross-check.
pub const ORACLE_BOX: ((f64, f64), (f64, f64)) = ((0.5, 1.5), (1.0, 3.0));

#[derive(Debug, Clone, Serialize)]
pub struct OracleStudy {
    pub lambda: f64,
    pub h: Vec<f64>,
    /// Max difference from the extension on the nodes of the coarsest lattice.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    /// Largest excursion of interior values past the boundary range, per level.
    pub max_principle_excess: Vec<f64>,
    pub sweeps: Vec<usize>,
}

/// Solves the Dirichlet problem on the rectangle with boundary values taken
/// from the extension of `f`, and compares with the extension inside.
pub fn oracle_cross_check(
    ext: &PoissonExtender<f64>,
    f: &BoundaryFunction<f64>,
    spacings: &[f64],
) -> Result<OracleStudy> {
    let (trange, xrange) = ORACLE_BOX;
    let lambda = ext.lambda();
    let coarse = spacings
        .first()
        .copied()
        .ok_or_else(|| LabError::invalid("no spacings given"))?;
    let nt = ((trange.1 - trange.0) / coarse).round() as usize;
    let nx = ((xrange.1 - xrange.0) / coarse).round() as usize;
    let mut reference = Vec::new();
    for i in 1..nt {
        for j in 1..nx {
            let (t, x) = (trange.0 + i as f64 * coarse, xrange.0 + j as f64 * coarse);
            reference.push((t, x, ext.value(f, t, x)?));
        }
    }
    let mut errors = Vec::new();
    let mut excess = Vec::new();
    let mut sweeps = Vec::new();
    for &h in spacings {
        let prob = RectangleProblem::new(trange, xrange, h, lambda, |t, x| {
            ext.value(f, t, x).unwrap_or(f64::NAN)
        })?;
        let (u, stats) = fd_solve(&prob, FD_SOLVER_TOL)?;
        if u.values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("finite-difference boundary data"));
        }
        let mut e = 0.0f64;
        for &(t, x, r) in &reference {
            let i = u
                .t_index(t)
                .ok_or_else(|| LabError::invalid("oracle lattices are not nested"))?;
            let j = u
                .x_index(x)
                .ok_or_else(|| LabError::invalid("oracle lattices are not nested"))?;
            e = e.max((u.values[[i, j]] - r).abs());
        }
        errors.push(e);
        excess.push(maximum_principle_excess(&prob, &u));
        sweeps.push(stats.sweeps);
    }
    Ok(OracleStudy {
        lambda: lambda.get(),
        h: spacings.to_vec(),
        orders: log2_ratios(&errors),
        errors,
        max_principle_excess: excess,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(l: f64) -> LambdaParam<f64> {
        LambdaParam::new(l).unwrap()
    }

    #[test]
    fn analytic_residuals_vanish() {
        let ts = uniform_nodes(0.5, 2.5, 41);
        let xs = uniform_nodes(0.3, 3.3, 61);
        for l in [0.3, 1.0, 2.0] {
            for (name, r) in analytic_residuals(lam(l), &ts, &xs).unwrap() {
                assert!(r < 1e-9, "{name} {l}: {r}");
            }
        }
    }

    #[test]
    fn kernel_exponent_near_two_lambda_plus_one() {
        let fit = kernel_sup_exponent(lam(1.0)).unwrap();
        assert!((fit.exponent - 3.0).abs() < 0.3, "{fit:?}");
    }

    #[test]
    fn disk_reproduction_is_seeded() {
        let a = disk_reproduction(lam(1.0), 0.3, 5, 7).unwrap();
        let b = disk_reproduction(lam(1.0), 0.3, 5, 7).unwrap();
        assert_eq!(a.max_error, b.max_error);
        assert!(a.max_error < 1e-6);
    }
}
