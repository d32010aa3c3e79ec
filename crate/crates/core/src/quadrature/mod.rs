//! Quadrature rules: Gauss–Legendre, Gauss–Jacobi and the sine-weighted rule
//! for `∫₀^π g(β) (sin β)^(2λ−1) dβ`, plus composite and adaptive drivers.

mod composite;
mod golub_welsch;

pub use composite::{
    adaptive_gauss, integrate_panels, jacobi_left_panel, jacobi_right_panel, panel_sum, PanelRules,
};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use golub_welsch::{gauss_from_recurrence, jacobi_recurrence};

/// Nodes and positive weights on a finite domain. `weight_exponent` records
/// the exponent of a built-in weight (0 for plain rules).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    domain: (T, T),
    weight_exponent: T,
}

impl<T: Scalar> QuadratureRule<T> {
    /// Assembles a rule, checking ordering, interiority and positivity.
    pub fn new(nodes: Vec<T>, weights: Vec<T>, domain: (T, T), weight_exponent: T) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(LabError::invalid(
                "rule needs equal, nonzero numbers of nodes and weights",
            ));
        }
        if !(domain.0 < domain.1) {
            return Err(LabError::invalid("rule domain must satisfy a < b"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::invalid("rule nodes must be strictly increasing"));
        }
        if nodes.iter().any(|&x| !(x > domain.0 && x < domain.1)) {
            return Err(LabError::invalid(
                "rule nodes must be interior to the domain",
            ));
        }
        if weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(LabError::invalid(
                "rule weights must be positive and finite",
            ));
        }
        Ok(Self {
            nodes,
            weights,
            domain,
            weight_exponent,
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn weight_exponent(&self) -> T {
        self.weight_exponent
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// `Σ wᵢ g(xᵢ)`, summed in node order. A non-finite sample is an error.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut g: F) -> Result<T> {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = g(x);
            if !v.is_finite() {
                return Err(LabError::NonFinite("quadrature integrand"));
            }
            acc = acc + w * v;
        }
        Ok(acc)
    }

    /// Like [`integrate`](Self::integrate) without the finiteness check.
    #[inline]
    pub fn sum<F: FnMut(T) -> T>(&self, mut g: F) -> T {
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * g(x);
        }
        acc
    }

    /// Affine image of a plain rule on a new interval. Weights are scaled by
    /// `((b - a) / (b0 - a0))^(1 + weight_exponent)` so that an algebraic
    /// endpoint weight keeps its form.
    pub fn mapped(&self, a: T, b: T) -> Self {
        let (a0, b0) = self.domain;
        let scale = (b - a) / (b0 - a0);
        let wscale = scale.powf(T::one() + self.weight_exponent);
        Self {
            nodes: self.nodes.iter().map(|&x| a + (x - a0) * scale).collect(),
            weights: self.weights.iter().map(|&w| w * wscale).collect(),
            domain: (a, b),
            weight_exponent: self.weight_exponent,
        }
    }
}

/// Gauss–Jacobi rule on `[-1, 1]` for the weight `(1 − w)^alpha (1 + w)^beta`.
/// The stored `weight_exponent` is `alpha + beta`, the homogeneity degree that
/// [`QuadratureRule::mapped`] needs.
pub fn gauss_jacobi<T: Scalar>(n: usize, alpha: T, beta: T) -> Result<QuadratureRule<T>> {
    if n == 0 {
        return Err(LabError::invalid("Gauss–Jacobi rule needs n >= 1"));
    }
    if !(alpha > -T::one()) || !(beta > -T::one()) {
        return Err(LabError::invalid("Gauss–Jacobi exponents must exceed -1"));
    }
    let rec = jacobi_recurrence(n, alpha, beta);
    let (nodes, weights) = gauss_from_recurrence(&rec, n)?;
    QuadratureRule::new(nodes, weights, (-T::one(), T::one()), alpha + beta)
}

/// `n`-point Gauss–Legendre rule on `[a, b]`, exact for degree `2n − 1`.
pub fn gauss_legendre<T: Scalar>(n: usize, a: T, b: T) -> Result<QuadratureRule<T>> {
    if !(a < b) {
        return Err(LabError::invalid(
            "Gauss–Legendre interval must satisfy a < b",
        ));
    }
    let base = gauss_jacobi(n, T::zero(), T::zero())?;
    Ok(base.mapped(a, b))
}

/// Rule for `∫₀^π g(β) (sin β)^(2λ−1) dβ`. The substitution `w = cos β` turns
/// this into a Gauss–Jacobi problem with both exponents `λ − 1`.
pub fn sine_weighted_rule<T: Scalar>(n: usize, lambda: T) -> Result<QuadratureRule<T>> {
    if !(lambda > T::zero()) {
        return Err(LabError::invalid(format!(
            "sine-weighted rule needs lambda > 0, got {lambda}"
        )));
    }
    let jac = gauss_jacobi(n, lambda - T::one(), lambda - T::one())?;
    let mut pairs: Vec<(T, T)> = jac
        .nodes()
        .iter()
        .zip(jac.weights())
        .map(|(&w, &wt)| (w.max(-T::one()).min(T::one()).acos(), wt))
        .collect();
    pairs.reverse();
    let (nodes, weights): (Vec<T>, Vec<T>) = pairs.into_iter().unzip();
    QuadratureRule::new(
        nodes,
        weights,
        (T::zero(), T::PI()),
        T::lit(2.0) * lambda - T::one(),
    )
}
