//! Radial, non-tangential and Hardy–Littlewood maximal functions on lattices,
//! and truncated `L¹(dm_λ)` norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryFunction, BoundaryKind};
use crate::error::{LabError, Result};
use crate::extension::PoissonExtender;
use crate::geometry::{weighted_length, LambdaParam};
use crate::grid::{csv_float, geometric_nodes};
use crate::quadrature::{
    gauss_jacobi, gauss_legendre, jacobi_left_panel, panel_sum, QuadratureRule,
};
use crate::scalar::Scalar;

/// Points per cone cross-section, `y = x + t (j − 8)/9`; `j = 8` is the apex ray.
pub const CONE_POINTS: usize = 17;
const APEX: usize = CONE_POINTS / 2;
/// Default geometric ratio of the `t`-sweep.
pub const SWEEP_RATIO: f64 = 1.05;
/// Offsets `j/8` of uncentered interval centres, `j = −7..=7`.
const UNCENTERED_OFFSETS: i32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Radial,
    Nontangential,
    HardyLittlewood,
}

/// Geometric `t`-grid `t_min, t_min q, …, t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSweep {
    pub t_min: f64,
    pub t_max: f64,
    pub ratio: f64,
}

impl TSweep {
    /// `t_min = h/2`, `t_max = 8·diam(supp f)`, ratio 1.05.
    pub fn for_support(h: f64, diameter: f64) -> Self {
        Self {
            t_min: h * 0.5,
            t_max: 8.0 * diameter,
            ratio: SWEEP_RATIO,
        }
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        if self.ratio > 1.1 {
            return Err(LabError::invalid(format!(
                "sweep ratio {} exceeds 1.1",
                self.ratio
            )));
        }
        geometric_nodes(self.t_min, self.t_max, self.ratio)
    }

    /// The sweep with both ends pushed out by `factor`.
    pub fn enlarged(&self, factor: f64) -> Self {
        Self {
            t_min: self.t_min / factor,
            t_max: self.t_max * factor,
            ratio: self.ratio,
        }
    }
}

/// `P_t f(y)` on every cone cross-section `y = x + t (j − 8)/9` for the
/// evaluation points `x` and the sweep `t`; entries with `y ≤ 0` are NaN.
#[derive(Debug, Clone)]
pub struct ConeField {
    pub x_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub sweep: TSweep,
    /// `values[k][i][j]` for `t_k`, `x_i`, cone point `j`.
    values: Vec<Vec<[f64; CONE_POINTS]>>,
}

#[inline]
fn cone_y(x: f64, t: f64, j: usize) -> f64 {
    x + t * (j as f64 - APEX as f64) / (APEX as f64 + 1.0)
}

impl ConeField {
    pub fn compute(
        ext: &PoissonExtender<f64>,
        f: &BoundaryFunction<f64>,
        x_nodes: &[f64],
        sweep: TSweep,
    ) -> Result<Self> {
        if x_nodes.is_empty()
            || x_nodes.iter().any(|&x| !(x > 0.0))
            || x_nodes.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(LabError::invalid(
                "maximal evaluation points must be positive and increasing",
            ));
        }
        let t_nodes = sweep.nodes()?;
        let values = t_nodes
            .par_iter()
            .map(|&t| {
                x_nodes
                    .iter()
                    .map(|&x| {
                        let mut row = [f64::NAN; CONE_POINTS];
                        for (j, slot) in row.iter_mut().enumerate() {
                            let y = cone_y(x, t, j);
                            if y > 0.0 {
                                *slot = ext.value(f, t, y)?;
                            }
                        }
                        Ok(row)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            x_nodes: x_nodes.to_vec(),
            t_nodes,
            sweep,
            values,
        })
    }

    /// Pointwise sum of two fields on the same lattice.
    pub fn add(&self, other: &ConeField) -> Result<ConeField> {
        if self.x_nodes != other.x_nodes || self.t_nodes != other.t_nodes {
            return Err(LabError::invalid("cone fields live on different lattices"));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (va, vb) in ra.iter_mut().zip(rb) {
                    *va += *vb;
                }
            }
        }
        Ok(out)
    }

    fn scan(&self, cone: bool, tag: OperatorTag) -> MaximalProfile {
        let n = self.x_nodes.len();
        let mut values = vec![0.0; n];
        let mut arg_t = vec![f64::NAN; n];
        let mut arg_y = vec![f64::NAN; n];
        for (k, &t) in self.t_nodes.iter().enumerate() {
            for i in 0..n {
                let row = &self.values[k][i];
                let js = if cone { 0..CONE_POINTS } else { APEX..APEX + 1 };
                for j in js {
                    let v = row[j].abs();
                    if v > values[i] || arg_t[i].is_nan() && !v.is_nan() {
                        values[i] = v;
                        arg_t[i] = t;
                        arg_y[i] = cone_y(self.x_nodes[i], t, j);
                    }
                }
            }
        }
        MaximalProfile {
            x_nodes: self.x_nodes.clone(),
            values,
            argmax_t: arg_t,
            argmax_y: arg_y,
            operator: tag,
            truncation: (self.sweep.t_min, self.sweep.t_max),
        }
    }

    /// `R(f)(x) = max_t |P_t f(x)|` over the sweep.
    pub fn radial(&self) -> MaximalProfile {
        self.scan(false, OperatorTag::Radial)
    }

    /// `N(f)(x) = max |P_t f(y)|` over the discretized cone `|y − x| < t`.
    pub fn nontangential(&self) -> MaximalProfile {
        self.scan(true, OperatorTag::Nontangential)
    }
}

/// Per-node maximal values with the lattice point where each is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalProfile {
    pub x_nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax_t: Vec<f64>,
    pub argmax_y: Vec<f64>,
    pub operator: OperatorTag,
    pub truncation: (f64, f64),
}

impl MaximalProfile {
    /// CSV `x,value,argmax_t,argmax_y`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value,argmax_t,argmax_y\n");
        for i in 0..self.x_nodes.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                csv_float(self.x_nodes[i]),
                csv_float(self.values[i]),
                csv_float(self.argmax_t[i]),
                csv_float(self.argmax_y[i])
            ));
        }
        s
    }

    /// The profile as a piecewise-linear function, held constant down to 0.
    pub fn as_boundary_function(&self) -> Result<BoundaryFunction<f64>> {
        let mut xs = self.x_nodes.clone();
        let mut vs = self.values.clone();
        if xs[0] > 0.0 {
            xs.insert(0, 0.0);
            vs.insert(0, vs[0]);
        }
        BoundaryFunction::sampled(xs, vs)
    }
}

/// `R(f)` and `N(f)` from one shared cone field.
pub fn radial_and_nontangential(
    ext: &PoissonExtender<f64>,
    f: &BoundaryFunction<f64>,
    x_nodes: &[f64],
    sweep: TSweep,
) -> Result<(MaximalProfile, MaximalProfile)> {
    let field = ConeField::compute(ext, f, x_nodes, sweep)?;
    Ok((field.radial(), field.nontangential()))
}

pub fn radial_max(
    ext: &PoissonExtender<f64>,
    f: &BoundaryFunction<f64>,
    x_nodes: &[f64],
    sweep: TSweep,
) -> Result<MaximalProfile> {
    Ok(ConeField::compute(ext, f, x_nodes, sweep)?.radial())
}

pub fn nontangential_max(
    ext: &PoissonExtender<f64>,
    f: &BoundaryFunction<f64>,
    x_nodes: &[f64],
    sweep: TSweep,
) -> Result<MaximalProfile> {
    Ok(ConeField::compute(ext, f, x_nodes, sweep)?.nontangential())
}

/// `G(x) = ∫₀^x |g| y^{2λ} dy` with prefix sums at the knots of `g` and a
/// Gauss rule on the partial cell.
#[derive(Debug, Clone)]
pub struct WeightedPrimitive<'a, T> {
    g: &'a BoundaryFunction<T>,
    two_lambda: T,
    knots: Vec<T>,
    prefix: Vec<T>,
    panel: QuadratureRule<T>,
    axis: QuadratureRule<T>,
    exact_linear: bool,
}

impl<'a, T: Scalar> WeightedPrimitive<'a, T> {
    /// `lambda ≥ 0`; `λ = 0` gives Lebesgue measure.
    pub fn new(g: &'a BoundaryFunction<T>, lambda: T) -> Result<Self> {
        if !(lambda >= T::zero()) {
            return Err(LabError::invalid("weighted primitive needs lambda >= 0"));
        }
        let two_lambda = T::lit(2.0) * lambda;
        let (a, b) = g.domain();
        let mut knots = vec![T::zero(), a, b];
        knots.extend(g.breakpoints());
        if let BoundaryKind::GaussianBump { sigma, .. } = g.kind {
            let step = sigma * T::lit(0.25);
            let mut y = a + step;
            while y < b {
                knots.push(y);
                y = y + step;
            }
        }
        knots.sort_by(|p, q| p.partial_cmp(q).expect("finite knots"));
        knots.dedup();
        let exact_linear = matches!(
            g.kind,
            BoundaryKind::Constant { .. }
                | BoundaryKind::Indicator { .. }
                | BoundaryKind::Tent { .. }
                | BoundaryKind::Sampled { .. }
        );
        let mut out = Self {
            g,
            two_lambda,
            knots,
            prefix: Vec::new(),
            panel: gauss_legendre(16, -T::one(), T::one())?,
            axis: gauss_jacobi(16, T::zero(), two_lambda)?,
            exact_linear,
        };
        let mut acc = T::zero();
        let mut prefix = vec![T::zero()];
        for w in out.knots.windows(2) {
            acc = acc + out.cell(w[0], w[1]);
            prefix.push(acc);
        }
        out.prefix = prefix;
        Ok(out)
    }

    /// `∫_lo^hi |g| y^{2λ}` within a single knot cell.
    fn cell(&self, lo: T, hi: T) -> T {
        if !(hi > lo) {
            return T::zero();
        }
        let (a, b) = self.g.domain();
        if hi <= a || lo >= b {
            return T::zero();
        }
        let gv = |y: T| self.g.eval(y).abs();
        if self.exact_linear {
            // g is linear on the cell; split at a sign change
            let (g0, g1) = (
                self.g.scale() * self.g.rule_value(lo.max(a)),
                self.g.scale() * self.g.rule_value(hi.min(b)),
            );
            if g0 * g1 < T::zero() {
                let root = lo + (hi - lo) * g0 / (g0 - g1);
                return self.linear_piece(lo, root, g0.abs(), T::zero())
                    + self.linear_piece(root, hi, T::zero(), g1.abs());
            }
            return self.linear_piece(lo, hi, g0.abs(), g1.abs());
        }
        if lo == T::zero() {
            jacobi_left_panel(&self.axis, lo, hi, gv)
        } else {
            panel_sum(&self.panel, lo, hi, |y| gv(y) * y.powf(self.two_lambda))
        }
    }

    /// `∫_lo^hi (linear from v0 to v1) y^{2λ} dy` in closed form.
    fn linear_piece(&self, lo: T, hi: T, v0: T, v1: T) -> T {
        let e1 = self.two_lambda + T::one();
        let e2 = self.two_lambda + T::lit(2.0);
        let slope = (v1 - v0) / (hi - lo);
        let c0 = v0 - slope * lo;
        c0 * (hi.powf(e1) - lo.powf(e1)) / e1 + slope * (hi.powf(e2) - lo.powf(e2)) / e2
    }

    /// `G(x)`.
    pub fn at(&self, x: T) -> T {
        if !(x > T::zero()) {
            return T::zero();
        }
        let k = self.knots.partition_point(|&s| s <= x);
        // knots[k-1] <= x < knots[k]
        let base = self.prefix[k - 1];
        base + self.cell(self.knots[k - 1], x.min(*self.knots.last().expect("knots")))
    }

    /// `∫_a^b |g| dm_λ`.
    pub fn between(&self, a: T, b: T) -> T {
        self.at(b) - self.at(a)
    }
}

/// Interval family of the Hardy–Littlewood maximal function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalFamily {
    /// `I(x, s)` for `s` in the radius sweep.
    Centered,
    /// `I(x + s j/8, s)`, `j = −7..=7`: intervals containing `x`, not
    /// necessarily centred at it.
    Uncentered,
}

/// `M(g)(x) = sup (1/m_λ(I)) ∫_I |g| dm_λ` over the interval family with
/// radii from `radii` (sweep); `λ ≥ 0`.
pub fn hardy_littlewood_max(
    g: &BoundaryFunction<f64>,
    x_nodes: &[f64],
    radii: TSweep,
    lambda: f64,
    family: IntervalFamily,
) -> Result<MaximalProfile> {
    let prim = WeightedPrimitive::new(g, lambda)?;
    let ss = radii.nodes()?;
    let offsets: Vec<i32> = match family {
        IntervalFamily::Centered => vec![0],
        IntervalFamily::Uncentered => (-UNCENTERED_OFFSETS..=UNCENTERED_OFFSETS).collect(),
    };
    let n = x_nodes.len();
    let mut values = vec![0.0; n];
    let mut arg_t = vec![f64::NAN; n];
    let mut arg_y = vec![f64::NAN; n];
    for (i, &x) in x_nodes.iter().enumerate() {
        if !(x > 0.0) {
            return Err(LabError::invalid(
                "maximal evaluation points must be positive",
            ));
        }
        for &s in &ss {
            for &j in &offsets {
                let c = x + s * j as f64 / 8.0;
                if c <= 0.0 {
                    continue;
                }
                let (a, b) = ((c - s).max(0.0), c + s);
                let m = weighted_length(a, b, lambda);
                if !(m > 0.0) {
                    continue;
                }
                let avg = prim.between(a, b) / m;
                if avg > values[i] || arg_t[i].is_nan() {
                    values[i] = avg;
                    arg_t[i] = s;
                    arg_y[i] = c;
                }
            }
        }
    }
    Ok(MaximalProfile {
        x_nodes: x_nodes.to_vec(),
        values,
        argmax_t: arg_t,
        argmax_y: arg_y,
        operator: OperatorTag::HardyLittlewood,
        truncation: (radii.t_min, radii.t_max),
    })
}

/// A truncated norm with its tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Norm {
    /// `∫ |·| x^{2λ} dx` over the lattice span.
    pub truncated: f64,
    pub domain: (f64, f64),
    /// Decay exponent `s` fitted to `value ~ c x^{−s}` at the last nodes.
    pub decay_exponent: f64,
    /// `∫_X^∞ c x^{2λ−s} dx` when `s > 2λ + 1 + TAIL_MARGIN`.
    pub tail: Option<f64>,
}

impl L1Norm {
    pub fn tail_resolved(&self) -> bool {
        self.tail.is_some()
    }
}

/// Closer to the critical decay `x^{−(2λ+1)}` a two-node fit cannot tell a
/// convergent tail from a logarithmically divergent one.
pub const TAIL_MARGIN: f64 = 0.5;

/// Trapezoid rule for `∫ |v| x^{2λ} dx` on the lattice plus a power-law
/// tail fit from the last two nodes.
pub fn l1_norm(x_nodes: &[f64], values: &[f64], lambda: f64) -> Result<L1Norm> {
    if x_nodes.len() != values.len() || x_nodes.len() < 2 {
        return Err(LabError::invalid(
            "l1 norm needs >= 2 matching nodes and values",
        ));
    }
    let two_lambda = 2.0 * lambda;
    let w = |i: usize| values[i].abs() * x_nodes[i].powf(two_lambda);
    let mut acc = 0.0;
    for i in 0..x_nodes.len() - 1 {
        acc += 0.5 * (x_nodes[i + 1] - x_nodes[i]) * (w(i) + w(i + 1));
    }
    let n = x_nodes.len();
    let (x0, x1) = (x_nodes[n - 2], x_nodes[n - 1]);
    let (v0, v1) = (values[n - 2].abs(), values[n - 1].abs());
    let (s, tail) = if v1 == 0.0 {
        (f64::INFINITY, Some(0.0))
    } else if v0 == 0.0 {
        (f64::NAN, None)
    } else {
        let s = (v0 / v1).ln() / (x1 / x0).ln();
        let p = s - two_lambda - 1.0;
        let tail = (p > TAIL_MARGIN).then(|| v1 * x1.powf(two_lambda + 1.0) / p);
        (s, tail)
    };
    Ok(L1Norm {
        truncated: acc,
        domain: (x_nodes[0], x1),
        decay_exponent: s,
        tail,
    })
}

/// `∫ |f| dm_λ` for boundary data, exactly for piecewise-linear kinds.
pub fn l1_norm_function<T: Scalar>(f: &BoundaryFunction<T>, lambda: LambdaParam<T>) -> Result<T> {
    let p = WeightedPrimitive::new(f, lambda.get())?;
    Ok(p.at(f.domain().1))
}
