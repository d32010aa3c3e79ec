//! Dirichlet problems for the Bessel Laplace equation on rectangles away from
//! the axis, solved by red-black SOR on the five-point stencil
//!
//! ```text
//! (1 + λh/x) u_E + (1 − λh/x) u_W + u_N + u_S − 4u = 0.
//! ```

use ndarray::Array2;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::LambdaParam;
use crate::grid::{uniform_nodes, HarmonicGrid, Provenance};
use crate::scalar::Scalar;

/// Default residual target, in stencil units relative to the boundary data.
pub const FD_SOLVER_TOL: f64 = 1e-13;
const CHECK_EVERY: usize = 25;
const MAX_SWEEPS: usize = 200_000;

/// `[t₁, t₂] × [x₁, x₂]` with `x₁ > 0`, spacing `h` and Dirichlet data
/// sampled on the boundary lattice.
#[derive(Debug, Clone)]
pub struct RectangleProblem<T> {
    pub t_range: (T, T),
    pub x_range: (T, T),
    pub h: T,
    pub lambda: LambdaParam<T>,
    t_nodes: Vec<T>,
    x_nodes: Vec<T>,
    /// Boundary values on the full lattice; interior entries are ignored.
    boundary: Array2<T>,
}

fn divisions<T: Scalar>(len: T, h: T) -> Result<usize> {
    let n = (len / h).round();
    if !(n >= T::lit(2.0)) || ((n * h - len).abs() > T::lit(1e-9) * len) {
        return Err(LabError::invalid(format!(
            "spacing {h} must divide side length {len} into at least 2 cells"
        )));
    }
    Ok(n.to_usize().unwrap_or(0))
}

impl<T: Scalar> RectangleProblem<T> {
    /// Samples the Dirichlet data `g` on the boundary of the lattice.
    pub fn new<G: Fn(T, T) -> T>(
        t_range: (T, T),
        x_range: (T, T),
        h: T,
        lambda: LambdaParam<T>,
        g: G,
    ) -> Result<Self> {
        if !(x_range.0 > T::zero()) {
            return Err(LabError::invalid(
                "rectangle must stay off the axis (x1 > 0)",
            ));
        }
        if !(t_range.0 >= T::zero()) || !(t_range.1 > t_range.0) || !(x_range.1 > x_range.0) {
            return Err(LabError::invalid(
                "rectangle ranges must be increasing with t1 >= 0",
            ));
        }
        if !(lambda.get() * h / x_range.0 < T::one()) {
            return Err(LabError::invalid(format!(
                "stencil not diagonally dominant: h*lambda/x1 = {} >= 1",
                lambda.get() * h / x_range.0
            )));
        }
        let nt = divisions(t_range.1 - t_range.0, h)? + 1;
        let nx = divisions(x_range.1 - x_range.0, h)? + 1;
        let t_nodes = uniform_nodes(t_range.0, t_range.1, nt);
        let x_nodes = uniform_nodes(x_range.0, x_range.1, nx);
        let boundary = Array2::from_shape_fn((nt, nx), |(i, j)| {
            if i == 0 || j == 0 || i == nt - 1 || j == nx - 1 {
                g(t_nodes[i], x_nodes[j])
            } else {
                T::zero()
            }
        });
        if boundary.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("rectangle boundary data"));
        }
        Ok(Self {
            t_range,
            x_range,
            h,
            lambda,
            t_nodes,
            x_nodes,
            boundary,
        })
    }

    pub fn t_nodes(&self) -> &[T] {
        &self.t_nodes
    }

    pub fn x_nodes(&self) -> &[T] {
        &self.x_nodes
    }

    fn is_boundary(&self, i: usize, j: usize) -> bool {
        let (nt, nx) = self.boundary.dim();
        i == 0 || j == 0 || i == nt - 1 || j == nx - 1
    }

    /// `(min, max)` of the boundary data.
    pub fn boundary_range(&self) -> (T, T) {
        let (nt, nx) = self.boundary.dim();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..nt {
            for j in 0..nx {
                if self.is_boundary(i, j) {
                    lo = lo.min(self.boundary[[i, j]]);
                    hi = hi.max(self.boundary[[i, j]]);
                }
            }
        }
        (lo, hi)
    }

    /// The same problem with the boundary data reflected `t ↦ t₁ + t₂ − t`.
    pub fn reflected_in_t(&self) -> Self {
        let mut out = self.clone();
        let nt = self.t_nodes.len();
        for i in 0..nt {
            out.boundary
                .row_mut(i)
                .assign(&self.boundary.row(nt - 1 - i));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdStats {
    pub sweeps: usize,
    pub omega: f64,
    /// `max |4u − Σ stencil neighbours|` at the end, relative to the data scale.
    pub residual: f64,
}

/// Solves the discrete Dirichlet problem to `solver_tol` (stencil units,
/// relative to `max |boundary data|`).
pub fn fd_solve<T: Scalar>(
    prob: &RectangleProblem<T>,
    solver_tol: T,
) -> Result<(HarmonicGrid<T>, FdStats)> {
    let (nt, nx) = prob.boundary.dim();
    let lam_h = prob.lambda.get() * prob.h;
    let east: Vec<T> = prob.x_nodes.iter().map(|&x| T::one() + lam_h / x).collect();
    let west: Vec<T> = prob.x_nodes.iter().map(|&x| T::one() - lam_h / x).collect();
    let (lo, hi) = prob.boundary_range();
    let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
    let tol = solver_tol * scale;

    let mut u = prob.boundary.clone();
    // start from the mean of the boundary data
    let mean = (lo + hi) * T::lit(0.5);
    for i in 1..nt - 1 {
        for j in 1..nx - 1 {
            u[[i, j]] = mean;
        }
    }
    let rho_jacobi = ((T::PI() / T::from_usize_lossy(nt - 1)).cos()
        + (T::PI() / T::from_usize_lossy(nx - 1)).cos())
        * T::lit(0.5);
    let mut omega = T::lit(2.0) / (T::one() + (T::one() - rho_jacobi * rho_jacobi).sqrt());
    let quarter = T::lit(0.25);
    let defect = |u: &Array2<T>, i: usize, j: usize| {
        east[j] * u[[i, j + 1]] + west[j] * u[[i, j - 1]] + u[[i + 1, j]] + u[[i - 1, j]]
            - T::lit(4.0) * u[[i, j]]
    };
    let max_defect = |u: &Array2<T>| {
        let mut m = T::zero();
        for i in 1..nt - 1 {
            for j in 1..nx - 1 {
                m = m.max(defect(u, i, j).abs());
            }
        }
        m
    };
    let mut last = max_defect(&u);
    let mut sweeps = 0;
    while last > tol {
        for _ in 0..CHECK_EVERY {
            for colour in 0..2 {
                for i in 1..nt - 1 {
                    let start = 1 + (i + colour + 1) % 2;
                    for j in (start..nx - 1).step_by(2) {
                        let d = defect(&u, i, j);
                        u[[i, j]] = u[[i, j]] + omega * quarter * d;
                    }
                }
            }
        }
        sweeps += CHECK_EVERY;
        let now = max_defect(&u);
        if !now.is_finite() {
            return Err(LabError::NonFinite("fd relaxation"));
        }
        if now > last && omega > T::one() {
            // safeguard: back off towards Gauss–Seidel
            omega = T::one() + (omega - T::one()) * T::lit(0.5);
        }
        last = now;
        if sweeps >= MAX_SWEEPS {
            return Err(LabError::no_conv(
                "fd relaxation",
                format!("{sweeps} sweeps, residual {last} > {tol}"),
            ));
        }
    }
    let grid = HarmonicGrid::new(
        prob.t_nodes.clone(),
        prob.x_nodes.clone(),
        u,
        prob.lambda,
        Provenance::FdSolution,
    )?;
    Ok((
        grid,
        FdStats {
            sweeps,
            omega: omega.as_f64(),
            residual: (last / scale).as_f64(),
        },
    ))
}

/// `max` and `min` over interior nodes minus the boundary range; positive
/// entries are violations of the discrete maximum principle.
pub fn maximum_principle_excess<T: Scalar>(prob: &RectangleProblem<T>, u: &HarmonicGrid<T>) -> T {
    let (lo, hi) = prob.boundary_range();
    let (nt, nx) = u.dim();
    let mut excess = T::neg_infinity();
    for i in 1..nt - 1 {
        for j in 1..nx - 1 {
            let v = u.values[[i, j]];
            excess = excess.max(v - hi).max(lo - v);
        }
    }
    excess
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub h: Vec<f64>,
    /// Max error on the nodes of the coarsest lattice.
    pub errors: Vec<f64>,
    /// `log₂(e_h / e_{h/2})` for consecutive pairs.
    pub orders: Vec<f64>,
    /// All errors at rounding level: the order is undefined.
    pub exact: bool,
}

impl ConvergenceReport {
    pub fn final_order(&self) -> Option<f64> {
        if self.exact {
            None
        } else {
            self.orders.last().copied()
        }
    }
}

/// Errors below this (relative to the data) count as exact.
pub const EXACT_LEVEL: f64 = 1e-10;

/// Builds orders from errors measured against a reference on the coarsest
/// lattice.
pub fn orders_from_errors(h: Vec<f64>, errors: Vec<f64>, scale: f64) -> ConvergenceReport {
    let exact = errors.iter().all(|&e| e <= EXACT_LEVEL * scale);
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    ConvergenceReport {
        h,
        errors,
        orders,
        exact,
    }
}

/// Solves `make(h)` for each dyadic `h` and measures the error against
/// `reference` at the nodes of the coarsest lattice.
pub fn convergence_study<M, R>(
    make: M,
    h_list: &[f64],
    reference: R,
    solver_tol: f64,
) -> Result<ConvergenceReport>
where
    M: Fn(f64) -> Result<RectangleProblem<f64>>,
    R: Fn(f64, f64) -> f64,
{
    if h_list.len() < 2 || h_list.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-12) {
        return Err(LabError::invalid("h_list must be dyadic and decreasing"));
    }
    let mut errors = Vec::new();
    let mut coarse: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut scale = 0.0f64;
    for &h in h_list {
        let prob = make(h)?;
        let (u, _) = fd_solve(&prob, solver_tol)?;
        let (ct, cx) = coarse
            .get_or_insert_with(|| (u.t_nodes.clone(), u.x_nodes.clone()))
            .clone();
        let mut e = 0.0f64;
        for &t in &ct {
            for &x in &cx {
                let i = u
                    .t_index(t)
                    .ok_or_else(|| LabError::invalid("lattices are not nested"))?;
                let j = u
                    .x_index(x)
                    .ok_or_else(|| LabError::invalid("lattices are not nested"))?;
                let r = reference(t, x);
                scale = scale.max(r.abs());
                e = e.max((u.values[[i, j]] - r).abs());
            }
        }
        errors.push(e);
    }
    Ok(orders_from_errors(
        h_list.to_vec(),
        errors,
        scale.max(f64::MIN_POSITIVE),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(l: f64) -> LambdaParam<f64> {
        LambdaParam::new(l).unwrap()
    }

    #[test]
    fn exact_on_quadratic_and_cubic() {
        for &l in &[0.3, 1.0, 2.0] {
            let c = 1.0 + 2.0 * l;
            let quad = move |t: f64, x: f64| c * t * t - x * x;
            let cubic = move |t: f64, x: f64| t * t * t - 3.0 * t * x * x / c;
            for u in [&quad as &dyn Fn(f64, f64) -> f64, &cubic] {
                let p =
                    RectangleProblem::new((0.5, 1.5), (1.0, 3.0), 1.0 / 16.0, lam(l), u).unwrap();
                let (g, stats) = fd_solve(&p, FD_SOLVER_TOL).unwrap();
                assert!(stats.residual <= FD_SOLVER_TOL);
                let err = g
                    .t_nodes
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &t)| {
                        g.x_nodes
                            .iter()
                            .enumerate()
                            .map(move |(j, &x)| (i, j, t, x))
                    })
                    .map(|(i, j, t, x)| (g.values[[i, j]] - u(t, x)).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-9, "λ={l}: {err}");
            }
        }
    }

    #[test]
    fn rejects_bad_rectangles() {
        let g = |_: f64, _: f64| 0.0;
        assert!(RectangleProblem::new((0.0, 1.0), (0.0, 1.0), 0.1, lam(1.0), g).is_err());
        assert!(RectangleProblem::new((0.0, 1.0), (0.05, 1.05), 0.1, lam(1.0), g).is_err());
        assert!(RectangleProblem::new((0.0, 1.0), (1.0, 2.0), 0.3, lam(1.0), g).is_err());
    }

    #[test]
    fn maximum_principle_and_reflection() {
        let g =
            |t: f64, x: f64| (3.0 * t).sin() * (x - 1.7).abs() + if t > 1.2 { 1.0 } else { 0.0 };
        let p = RectangleProblem::new((0.5, 1.5), (1.0, 2.5), 1.0 / 32.0, lam(0.3), g).unwrap();
        let (u, _) = fd_solve(&p, FD_SOLVER_TOL).unwrap();
        assert!(maximum_principle_excess(&p, &u) <= 0.0);
        let r = p.reflected_in_t();
        let (ur, _) = fd_solve(&r, FD_SOLVER_TOL).unwrap();
        let nt = u.t_nodes.len();
        let diff = (0..nt)
            .flat_map(|i| (0..u.x_nodes.len()).map(move |j| (i, j)))
            .map(|(i, j)| (u.values[[i, j]] - ur.values[[nt - 1 - i, j]]).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn quadratic_study_reports_exact() {
        let l = 1.0;
        let u = |t: f64, x: f64| 3.0 * t * t - x * x;
        let rep = convergence_study(
            |h| RectangleProblem::new((0.5, 1.5), (1.0, 2.0), h, lam(l), u),
            &[0.25, 0.125, 0.0625],
            u,
            FD_SOLVER_TOL,
        )
        .unwrap();
        assert!(rep.exact);
        assert_eq!(rep.final_order(), None);
    }
}
