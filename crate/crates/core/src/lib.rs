//! λ-harmonic functions of the Bessel Laplace equation
//! `∂²ₜu + ∂²ₓu + (2λ/x)∂ₓu = 0`: Poisson kernels and extensions, weighted
//! measures, maximal operators, a finite-difference oracle, and empirical
//! verification suites for the inequalities these functions satisfy.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! verification layer and reports work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod extension;
pub mod fd_oracle;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod maximal;
pub mod quadrature;
pub mod report;
pub mod residual;
pub mod scalar;
pub mod special;
pub mod suite;
pub mod verifiers;

pub use error::{LabError, Result};
pub use scalar::Scalar;

pub type QuadratureRuleF64 = quadrature::QuadratureRule<f64>;
pub type BoundaryFunctionF64 = boundary::BoundaryFunction<f64>;
pub type LambdaF64 = geometry::LambdaParam<f64>;
pub type IntervalF64 = geometry::Interval<f64>;
pub type QuarterBallF64 = geometry::QuarterBall<f64>;
pub type HarmonicGridF64 = grid::HarmonicGrid<f64>;
