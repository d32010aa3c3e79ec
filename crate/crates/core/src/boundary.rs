//! Boundary data `f` on ℝ₊ for the Poisson semigroup.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryKind<T> {
    /// Constant value on the domain.
    Constant { value: T },
    /// Indicator of `(a, b)`.
    Indicator { a: T, b: T },
    /// Piecewise-linear hat on `(a, b)` with peak 1 at the midpoint.
    Tent { a: T, b: T },
    /// `exp(−(x − c)² / (2σ²))` truncated to `|x − c| < half_support`.
    GaussianBump {
        center: T,
        sigma: T,
        half_support: T,
    },
    /// Linear interpolation between samples.
    Sampled { xs: Vec<T>, values: Vec<T> },
}

/// A function on ℝ₊ that vanishes outside `domain`. `scale` multiplies the
/// underlying rule; scaling is applied after integration so that
/// homogeneity is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction<T> {
    pub kind: BoundaryKind<T>,
    domain: (T, T),
    scale: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_integrability_hint: Option<T>,
}

impl<T: Scalar> BoundaryFunction<T> {
    fn build(kind: BoundaryKind<T>, domain: (T, T)) -> Result<Self> {
        if !(domain.0 >= T::zero()) || !(domain.0 < domain.1) || !domain.1.is_finite() {
            return Err(LabError::invalid(
                "boundary function domain must satisfy 0 <= a < b < inf",
            ));
        }
        Ok(Self {
            kind,
            domain,
            scale: T::one(),
            p_integrability_hint: None,
        })
    }

    pub fn constant(value: T, a: T, b: T) -> Result<Self> {
        if !value.is_finite() {
            return Err(LabError::invalid("constant must be finite"));
        }
        Self::build(BoundaryKind::Constant { value }, (a, b))
    }

    pub fn indicator(a: T, b: T) -> Result<Self> {
        Self::build(BoundaryKind::Indicator { a, b }, (a, b))
    }

    pub fn tent(a: T, b: T) -> Result<Self> {
        Self::build(BoundaryKind::Tent { a, b }, (a, b))
    }

    pub fn gaussian_bump(center: T, sigma: T, half_support: T) -> Result<Self> {
        if !(sigma > T::zero()) || !(half_support > T::zero()) {
            return Err(LabError::invalid(
                "gaussian bump needs sigma > 0 and half_support > 0",
            ));
        }
        let a = (center - half_support).max(T::zero());
        Self::build(
            BoundaryKind::GaussianBump {
                center,
                sigma,
                half_support,
            },
            (a, center + half_support),
        )
    }

    pub fn sampled(xs: Vec<T>, values: Vec<T>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(LabError::invalid(
                "sampled function needs >= 2 matching samples",
            ));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::invalid("sample grid must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("sampled boundary values"));
        }
        let domain = (xs[0], xs[xs.len() - 1]);
        Self::build(BoundaryKind::Sampled { xs, values }, domain)
    }

    pub fn with_hint(mut self, p: T) -> Self {
        self.p_integrability_hint = Some(p);
        self
    }

    /// `c · f`, exactly homogeneous through every linear pipeline.
    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.scale = self.scale * c;
        out
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// The same rule with scale 1.
    pub fn unscaled(&self) -> Self {
        let mut out = self.clone();
        out.scale = T::one();
        out
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    /// Closed support (the domain for all kinds).
    pub fn support(&self) -> (T, T) {
        self.domain
    }

    pub fn diameter(&self) -> T {
        self.domain.1 - self.domain.0
    }

    /// Interior points where the rule has a kink or jump.
    pub fn breakpoints(&self) -> Vec<T> {
        match &self.kind {
            BoundaryKind::Tent { a, b } => vec![(*a + *b) * T::lit(0.5)],
            BoundaryKind::Sampled { xs, .. } => xs[1..xs.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// Jump discontinuities, including support endpoints where the rule
    /// does not vanish continuously.
    pub fn jumps(&self) -> Vec<T> {
        match &self.kind {
            BoundaryKind::Constant { .. } | BoundaryKind::Indicator { .. } => {
                vec![self.domain.0, self.domain.1]
            }
            _ => Vec::new(),
        }
    }

    /// Unscaled rule value; valid only inside the domain.
    #[inline]
    pub fn rule_value(&self, x: T) -> T {
        match &self.kind {
            BoundaryKind::Constant { value } => *value,
            BoundaryKind::Indicator { .. } => T::one(),
            BoundaryKind::Tent { a, b } => {
                let mid = (*a + *b) * T::lit(0.5);
                let half = (*b - *a) * T::lit(0.5);
                (T::one() - (x - mid).abs() / half).max(T::zero())
            }
            BoundaryKind::GaussianBump { center, sigma, .. } => {
                let z = (x - *center) / *sigma;
                (-(z * z) * T::lit(0.5)).exp()
            }
            BoundaryKind::Sampled { xs, values } => {
                let k = xs.partition_point(|&s| s <= x);
                if k == 0 {
                    values[0]
                } else if k >= xs.len() {
                    values[xs.len() - 1]
                } else {
                    let (x0, x1) = (xs[k - 1], xs[k]);
                    let s = (x - x0) / (x1 - x0);
                    values[k - 1] + s * (values[k] - values[k - 1])
                }
            }
        }
    }

    /// `f(x)`, zero outside the domain (open domain for indicators).
    pub fn eval(&self, x: T) -> T {
        let (a, b) = self.domain;
        let inside = match self.kind {
            BoundaryKind::Indicator { .. } | BoundaryKind::GaussianBump { .. } => x > a && x < b,
            _ => x >= a && x <= b,
        };
        if inside {
            self.scale * self.rule_value(x)
        } else {
            T::zero()
        }
    }

    /// Supremum of `|f|`.
    pub fn sup_abs(&self) -> T {
        let s = self.scale.abs();
        match &self.kind {
            BoundaryKind::Constant { value } => s * value.abs(),
            BoundaryKind::Sampled { values, .. } => {
                s * values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
            }
            _ => s,
        }
    }
}

impl FromStr for BoundaryFunction<f64> {
    type Err = LabError;

    /// `indicator:a,b` | `tent:a,b` | `gauss:center,sigma,half_support` |
    /// `const:value,a,b`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| LabError::invalid(format!("boundary spec `{s}` lacks `kind:args`")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| LabError::invalid(format!("boundary spec `{s}`: {e}")))?;
        let need = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(LabError::invalid(format!(
                    "boundary spec `{s}` needs {n} numbers"
                )))
            }
        };
        match name {
            "indicator" => {
                need(2)?;
                Self::indicator(nums[0], nums[1])
            }
            "tent" => {
                need(2)?;
                Self::tent(nums[0], nums[1])
            }
            "gauss" => {
                need(3)?;
                Self::gaussian_bump(nums[0], nums[1], nums[2])
            }
            "const" => {
                need(3)?;
                Self::constant(nums[0], nums[1], nums[2])
            }
            other => Err(LabError::invalid(format!(
                "unknown boundary kind `{other}`"
            ))),
        }
    }
}

/// Named members of the standard verification family.
pub fn standard_family<T: Scalar>() -> Vec<(&'static str, BoundaryFunction<T>)> {
    let l = T::lit;
    vec![
        (
            "indicator_1_2",
            BoundaryFunction::indicator(l(1.0), l(2.0)).expect("valid"),
        ),
        (
            "tent_1_3",
            BoundaryFunction::tent(l(1.0), l(3.0)).expect("valid"),
        ),
        (
            "gauss_2",
            BoundaryFunction::gaussian_bump(l(2.0), l(0.2), l(1.2)).expect("valid"),
        ),
        (
            "indicator_near_axis",
            BoundaryFunction::indicator(l(0.1), l(0.4)).expect("valid"),
        ),
    ]
}

/// Name of [`mean_zero_dipole`] in reports.
pub const DIPOLE_NAME: &str = "dipole_mean_zero";

/// `tent(1, 2) − c·tent(2, 3)` with `c` chosen so that `∫ f dm_λ = 0`.
///
/// Nonnegative data have maximal functions decaying like `x^{−(2λ+1)}`, which
/// is not integrable against `dm_λ`; this datum decays one power faster.
pub fn mean_zero_dipole(lambda: f64) -> Result<BoundaryFunction<f64>> {
    let lam = crate::geometry::LambdaParam::new(lambda)?;
    let lo = crate::maximal::l1_norm_function(&BoundaryFunction::tent(1.0, 2.0)?, lam)?;
    let hi = crate::maximal::l1_norm_function(&BoundaryFunction::tent(2.0, 3.0)?, lam)?;
    BoundaryFunction::sampled(
        vec![0.0, 1.0, 1.5, 2.0, 2.5, 3.0],
        vec![0.0, 0.0, 1.0, 0.0, -lo / hi, 0.0],
    )
}

/// Looks up a family member by name; `all` is not accepted here.
pub fn family_member(name: &str) -> Result<BoundaryFunction<f64>> {
    standard_family::<f64>()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| LabError::invalid(format!("unknown family member `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_rules() {
        let f = BoundaryFunction::indicator(1.0f64, 2.0).unwrap();
        assert_eq!(f.eval(1.5), 1.0);
        assert_eq!(f.eval(2.5), 0.0);
        let t = BoundaryFunction::tent(1.0f64, 3.0).unwrap();
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(1.5), 0.5);
        assert_eq!(t.breakpoints(), vec![2.0]);
        let s = BoundaryFunction::sampled(vec![0.0f64, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(2.0), 1.0);
        let d = mean_zero_dipole(1.0).unwrap();
        let (mut pos, mut neg) = (0.0, 0.0);
        for k in 0..3000 {
            let x = (k as f64 + 0.5) * 1e-3;
            let w = d.eval(x) * x * x * 1e-3;
            if w > 0.0 {
                pos += w
            } else {
                neg -= w
            }
        }
        assert!((pos - neg).abs() < 1e-6 * pos, "{pos} {neg}");
        assert_eq!(s.eval(4.0), 0.0);
    }

    #[test]
    fn scaling_is_recorded() {
        let f = BoundaryFunction::tent(1.0f64, 3.0).unwrap().scaled(3.0);
        assert_eq!(f.eval(2.0), 3.0);
        assert_eq!(f.sup_abs(), 3.0);
    }

    #[test]
    fn invalid_samples() {
        assert!(BoundaryFunction::sampled(vec![0.0f64, 0.0], vec![1.0, 1.0]).is_err());
        assert!(BoundaryFunction::sampled(vec![0.0f64, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(BoundaryFunction::indicator(2.0f64, 1.0).is_err());
    }

    #[test]
    fn parse_specs() {
        let f: BoundaryFunction<f64> = "indicator:1,2".parse().unwrap();
        assert_eq!(f.domain(), (1.0, 2.0));
        let g: BoundaryFunction<f64> = "gauss:2,0.2,1.2".parse().unwrap();
        assert!((g.eval(2.0) - 1.0).abs() < 1e-15);
        assert!("wobble:1".parse::<BoundaryFunction<f64>>().is_err());
        assert!("tent:1".parse::<BoundaryFunction<f64>>().is_err());
    }
}
