//! The Bessel Laplace operator on lattices and the Cauchy–Riemann conjugate.

use ndarray::Array2;

use crate::error::{LabError, Result};
use crate::grid::HarmonicGrid;
use crate::scalar::Scalar;

const UNIFORM_TOL: f64 = 1e-9;

/// Spacing of a uniform axis, or an error naming the axis.
pub fn uniform_spacing<T: Scalar>(name: &str, nodes: &[T]) -> Result<T> {
    if nodes.len() < 3 {
        return Err(LabError::invalid(format!(
            "{name} needs at least 3 nodes, got {}",
            nodes.len()
        )));
    }
    let h = (nodes[nodes.len() - 1] - nodes[0]) / T::from_usize_lossy(nodes.len() - 1);
    let tol = T::lit(UNIFORM_TOL) * h;
    if nodes.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return Err(LabError::invalid(format!(
            "{name} must be uniformly spaced"
        )));
    }
    Ok(h)
}

/// `∂²ₜu + ∂²ₓu + (2λ/x)∂ₓu` at interior lattice nodes.
#[derive(Debug, Clone)]
pub struct ResidualField<T> {
    pub t_nodes: Vec<T>,
    pub x_nodes: Vec<T>,
    pub values: Array2<T>,
    pub ht: T,
    pub hx: T,
}

impl<T: Scalar> ResidualField<T> {
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Residual in stencil units: `max h² |res| / scale`, with `h` the
    /// larger spacing. This is the size of the five-point defect relative
    /// to the data.
    pub fn scaled_max(&self, scale: T) -> T {
        let h = self.ht.max(self.hx);
        self.max_abs() * h * h / scale
    }

    /// Value at lattice point `(t, x)` when it is an interior node.
    pub fn at(&self, t: T, x: T) -> Option<T> {
        let tol = T::lit(1e-9) * self.ht.min(self.hx);
        let i = self.t_nodes.iter().position(|&s| (s - t).abs() <= tol)?;
        let j = self.x_nodes.iter().position(|&s| (s - x).abs() <= tol)?;
        Some(self.values[[i, j]])
    }
}

/// Central-difference Bessel Laplacian at the interior nodes of a grid that
/// is uniform in each direction. Columns at `x = 0` are excluded.
pub fn residual_bessel_laplace<T: Scalar>(u: &HarmonicGrid<T>) -> Result<ResidualField<T>> {
    let ht = uniform_spacing("t_nodes", &u.t_nodes)?;
    let hx = uniform_spacing("x_nodes", &u.x_nodes)?;
    let two_lambda = u.lambda.weight_exponent();
    let (nt, nx) = u.dim();
    let j0 = if u.x_nodes[0] > T::zero() { 1 } else { 2 };
    if j0 + 1 > nx - 1 {
        return Err(LabError::invalid("no interior x nodes away from the axis"));
    }
    let v = &u.values;
    let (ht2, hx2, two_hx) = (ht * ht, hx * hx, T::lit(2.0) * hx);
    let two = T::lit(2.0);
    let values = Array2::from_shape_fn((nt - 2, nx - 1 - j0), |(a, b)| {
        let i = a + 1;
        let j = b + j0;
        let c = v[[i, j]];
        let utt = (v[[i + 1, j]] - two * c + v[[i - 1, j]]) / ht2;
        let uxx = (v[[i, j + 1]] - two * c + v[[i, j - 1]]) / hx2;
        let ux = (v[[i, j + 1]] - v[[i, j - 1]]) / two_hx;
        utt + uxx + two_lambda / u.x_nodes[j] * ux
    });
    Ok(ResidualField {
        t_nodes: u.t_nodes[1..nt - 1].to_vec(),
        x_nodes: u.x_nodes[j0..nx - 1].to_vec(),
        values,
        ht,
        hx,
    })
}

/// `v` on the lattice of `u` restricted to interior x-columns.
#[derive(Debug, Clone)]
pub struct ConjugateGrid<T> {
    pub t_nodes: Vec<T>,
    pub x_nodes: Vec<T>,
    pub values: Array2<T>,
    /// `max |u(T_max, ·)|`.
    pub top_decay: T,
}

/// Residuals of both Cauchy–Riemann equations.
#[derive(Debug, Clone, Copy)]
pub struct CauchyRiemannResiduals<T> {
    /// `max |∂ₜv + ∂ₓu|`, cell-averaged; zero up to rounding by construction.
    pub first: T,
    /// `max |∂ₜu − ∂ₓv − (2λ/x)v|` at interior nodes.
    pub second: T,
}

/// `v(t, x) = ∫ₜ^{T_max} ∂ₓu(s, x) ds` by the trapezoid rule down each
/// column, so that `∂ₜv = −∂ₓu` and `v(T_max, ·) = 0`. The last t-node is
/// `T_max`; `u` there must be below `tol`. The x-axis must be uniform; the
/// t-axis may be graded.
pub fn conjugate_via_cr<T: Scalar>(u: &HarmonicGrid<T>, tol: T) -> Result<ConjugateGrid<T>> {
    let hx = uniform_spacing("x_nodes", &u.x_nodes)?;
    let (nt, nx) = u.dim();
    if nt < 3 {
        return Err(LabError::invalid("conjugate needs at least 3 t nodes"));
    }
    let top = u
        .values
        .row(nt - 1)
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if top > tol {
        return Err(LabError::Constraint(format!(
            "T_max = {} too small: |u(T_max, .)| = {top} exceeds {tol}",
            u.t_nodes[nt - 1]
        )));
    }
    let v = &u.values;
    let two_hx = T::lit(2.0) * hx;
    let ux = |i: usize, j: usize| (v[[i, j + 1]] - v[[i, j - 1]]) / two_hx;
    let mut out = Array2::zeros((nt, nx - 2));
    for j in 1..nx - 1 {
        let mut acc = T::zero();
        for i in (0..nt - 1).rev() {
            let dt = u.t_nodes[i + 1] - u.t_nodes[i];
            acc = acc + dt * T::lit(0.5) * (ux(i, j) + ux(i + 1, j));
            out[[i, j - 1]] = acc;
        }
    }
    Ok(ConjugateGrid {
        t_nodes: u.t_nodes.clone(),
        x_nodes: u.x_nodes[1..nx - 1].to_vec(),
        values: out,
        top_decay: top,
    })
}

/// Checks both equations `∂ₜv = −∂ₓu` and `∂ₜu = ∂ₓv + (2λ/x)v` on the
/// nodes where the needed differences exist and `t ≤ t_limit`.
pub fn cauchy_riemann_residuals<T: Scalar>(
    u: &HarmonicGrid<T>,
    v: &ConjugateGrid<T>,
    t_limit: T,
) -> Result<CauchyRiemannResiduals<T>> {
    let hx = uniform_spacing("x_nodes", &u.x_nodes)?;
    let (nt, nx) = u.dim();
    if v.values.dim() != (nt, nx - 2) {
        return Err(LabError::invalid("conjugate lattice does not match u"));
    }
    let two_lambda = u.lambda.weight_exponent();
    let (uu, vv) = (&u.values, &v.values);
    let two_hx = T::lit(2.0) * hx;
    let half = T::lit(0.5);
    let mut first = T::zero();
    for i in 0..nt - 1 {
        if u.t_nodes[i] > t_limit {
            break;
        }
        let dt = u.t_nodes[i + 1] - u.t_nodes[i];
        for j in 1..nx - 1 {
            let vt = (vv[[i + 1, j - 1]] - vv[[i, j - 1]]) / dt;
            let ux0 = (uu[[i, j + 1]] - uu[[i, j - 1]]) / two_hx;
            let ux1 = (uu[[i + 1, j + 1]] - uu[[i + 1, j - 1]]) / two_hx;
            first = first.max((vt + half * (ux0 + ux1)).abs());
        }
    }
    let mut second = T::zero();
    for i in 1..nt - 1 {
        if u.t_nodes[i] > t_limit {
            break;
        }
        let (tm, t0, tp) = (u.t_nodes[i - 1], u.t_nodes[i], u.t_nodes[i + 1]);
        let (a, b) = (t0 - tm, tp - t0);
        // three-point derivative on a possibly graded axis
        for j in 2..nx - 2 {
            let ut = (uu[[i + 1, j]] * a * a - uu[[i - 1, j]] * b * b
                + uu[[i, j]] * (b * b - a * a))
                / (a * b * (a + b));
            let c = j - 1;
            let vx = (vv[[i, c + 1]] - vv[[i, c - 1]]) / two_hx;
            let r = ut - vx - two_lambda / u.x_nodes[j] * vv[[i, c]];
            second = second.max(r.abs());
        }
    }
    Ok(CauchyRiemannResiduals { first, second })
}

/// Uniform nodes `t0, t0 + h, …, t1` followed by a geometric tail with
/// ratio `1 + h` up to `t_max`.
pub fn nodes_with_tail<T: Scalar>(t0: T, t1: T, h: T, t_max: T) -> Result<Vec<T>> {
    if !(t0 > T::zero()) || !(t1 > t0) || !(h > T::zero()) || !(t_max > t1) {
        return Err(LabError::invalid(
            "tail nodes need 0 < t0 < t1 < t_max and h > 0",
        ));
    }
    let n = ((t1 - t0) / h).round().to_usize().unwrap_or(0);
    let mut out: Vec<T> = (0..=n).map(|i| t0 + h * T::from_usize_lossy(i)).collect();
    let mut t = out[n];
    let ratio = T::one() + h;
    while t * ratio < t_max {
        t = t * ratio;
        out.push(t);
    }
    out.push(t_max);
    Ok(out)
}
