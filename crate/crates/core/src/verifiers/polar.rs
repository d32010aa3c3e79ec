//! Circle averages about a point of the axis and the near-axis argument
//! built on them.
//!
//! With `t = t_c + r cos θ`, `x = r sin θ`:
//! `m_p(r)^p = ∫₀^π |u|^p (sin θ)^{2λ} dθ`, `m_∞(r) = max_θ |u|` and
//! `H = m̃_λ(B(5R))⁻¹ ∫₀^{5R} m_p(r)^p r^{2λ+1} dr`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SweepParams, VerificationReport};
use crate::error::{LabError, Result};
use crate::extension::DiskExtender;
use crate::quadrature::{gauss_jacobi, gauss_legendre, sine_weighted_rule, QuadratureRule};
use crate::special::sine_power_integral;

/// Tolerance for inequalities that hold up to quadrature error.
pub const POLAR_QUAD_TOL: f64 = 1e-6;
const R_PANELS: usize = 10;
const R_PANEL_NODES: usize = 8;
const CHAIN_OUTER: [f64; 4] = [2.0, 3.0, 4.0, 5.0];
const CHAIN_RATIOS: [f64; 4] = [0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub rho: f64,
    pub r: f64,
    pub m_inf_rho: f64,
    pub m1_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarProfile {
    pub lambda: f64,
    pub p: f64,
    pub radius: f64,
    pub t_center: f64,
    pub n_theta: usize,
    pub r_nodes: Vec<f64>,
    /// Weights of `∫₀^{5R} g(r) r^{2λ+1} dr`.
    pub volume_weights: Vec<f64>,
    /// Weights of `∫_R^{5R} g(r) dr/r`, zero below `R`.
    pub log_weights: Vec<f64>,
    pub m_p: Vec<f64>,
    pub m_1: Vec<f64>,
    pub m_inf: Vec<f64>,
    pub h: f64,
    /// `m̃_λ` of the half-disk of radius `5R`.
    pub measure: f64,
    pub chain: Vec<ChainSample>,
}

struct CircleRule {
    rule: QuadratureRule<f64>,
    sup_angles: Vec<f64>,
}

impl CircleRule {
    fn new(lambda: f64, n: usize) -> Result<Self> {
        let rule = sine_weighted_rule(n, lambda + 0.5)?;
        let mut sup_angles: Vec<f64> = rule.nodes().to_vec();
        let m = 2 * n;
        sup_angles.extend((0..=m).map(|k| std::f64::consts::PI * k as f64 / m as f64));
        Ok(Self { rule, sup_angles })
    }

    /// `(m_p^p, m_1, m_∞)` on the circle of radius `r`.
    fn moments(
        &self,
        u: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
        t_c: f64,
        r: f64,
        p: f64,
    ) -> Result<(f64, f64, f64)> {
        let at = |th: f64| u(t_c + r * th.cos(), r * th.sin()).map(f64::abs);
        let mut mp = 0.0;
        let mut m1 = 0.0;
        for (&th, &w) in self.rule.nodes().iter().zip(self.rule.weights()) {
            let v = at(th)?;
            mp += w * v.powf(p);
            m1 += w * v;
        }
        let mut sup = 0.0f64;
        for &th in &self.sup_angles {
            sup = sup.max(at(th)?);
        }
        Ok((mp, m1, sup))
    }
}

/// Tabulates `m_p`, `m_1`, `m_∞` and `H` on the half-disk of radius `5R`
/// about `(t_c, 0)`; `u` is evaluated with `x ≥ 0` (even extension).
pub fn polar_quantities(
    u: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
    t_c: f64,
    radius: f64,
    p: f64,
    lambda: f64,
    n_theta: usize,
) -> Result<PolarProfile> {
    if !(radius > 0.0) || !(t_c - 5.0 * radius > 0.0) {
        return Err(LabError::invalid(format!(
            "half-disk of radius 5R = {} about t = {t_c} leaves the half-plane t > 0",
            5.0 * radius
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(LabError::invalid(format!(
            "polar exponent p must lie in (0, 1], got {p}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(LabError::invalid("polar quantities need lambda > 0"));
    }
    let circle = CircleRule::new(lambda, n_theta)?;
    let e = 2.0 * lambda + 1.0;
    let width = 5.0 * radius / R_PANELS as f64;
    let panel = gauss_legendre(R_PANEL_NODES, -1.0, 1.0)?;
    let axis = gauss_jacobi(R_PANEL_NODES, 0.0, e)?;
    let half = 0.5 * width;
    let mut r_nodes = Vec::new();
    let mut volume_weights = Vec::new();
    let mut log_weights = Vec::new();
    for k in 0..R_PANELS {
        let mid = (k as f64 + 0.5) * width;
        let rule = if k == 0 { &axis } else { &panel };
        for (&z, &w) in rule.nodes().iter().zip(rule.weights()) {
            let r = mid + half * z;
            r_nodes.push(r);
            volume_weights.push(if k == 0 {
                half.powf(1.0 + e) * w
            } else {
                half * w * r.powf(e)
            });
            log_weights.push(if mid > radius { half * w / r } else { 0.0 });
        }
    }
    let moments = r_nodes
        .par_iter()
        .map(|&r| circle.moments(u, t_c, r, p))
        .collect::<Result<Vec<_>>>()?;
    let m_p: Vec<f64> = moments.iter().map(|m| m.0.powf(1.0 / p)).collect();
    let m_1: Vec<f64> = moments.iter().map(|m| m.1).collect();
    let m_inf: Vec<f64> = moments.iter().map(|m| m.2).collect();
    let measure = sine_power_integral(lambda + 0.5) * (5.0 * radius).powf(e + 1.0) / (e + 1.0);
    let h = volume_weights
        .iter()
        .zip(&moments)
        .map(|(w, m)| w * m.0)
        .sum::<f64>()
        / measure;

    let pairs: Vec<(f64, f64)> = CHAIN_OUTER
        .iter()
        .flat_map(|&k| {
            CHAIN_RATIOS
                .iter()
                .map(move |&s| (k * radius, s * k * radius))
        })
        .collect();
    let chain = pairs
        .par_iter()
        .map(|&(r, rho)| {
            let (_, m1, _) = circle.moments(u, t_c, r, p)?;
            let (_, _, sup) = circle.moments(u, t_c, rho, p)?;
            Ok(ChainSample {
                rho,
                r,
                m_inf_rho: sup,
                m1_r: m1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolarProfile {
        lambda,
        p,
        radius,
        t_center: t_c,
        n_theta,
        r_nodes,
        volume_weights,
        log_weights,
        m_p,
        m_1,
        m_inf,
        h,
        measure,
        chain,
    })
}

/// Lattice supremum of the calibrated disk kernel `P(s, θ, φ)` over
/// `θ, φ ∈ [0, π]`, refined towards the axis where it peaks.
pub fn kernel_sup(disk: &DiskExtender<f64>, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(LabError::invalid(format!(
            "kernel sup needs 0 < rho/r < 1, got {s}"
        )));
    }
    let pi = std::f64::consts::PI;
    let mut angles: Vec<f64> = (0..=64).map(|k| pi * k as f64 / 64.0).collect();
    for k in 1..=16 {
        let d = (1.0 - s) * k as f64 / 8.0;
        if d < pi {
            angles.push(d);
            angles.push(pi - d);
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    angles.dedup();
    let sup = angles
        .par_iter()
        .map(|&th| {
            angles
                .iter()
                .map(|&ph| disk.kernel(s, th, ph))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup / disk.normalization())
}

/// Picks `r₀ ∈ (R, 5R)` minimizing `m_∞(r)/H^{1/p}` and checks the
/// interpolation bound `m_1 ≤ m_∞^{1−p} m_p^p`, the bound
/// `∫_R^{5R} m_p^p dr/r ≤ K H`, Jensen's step, and the kernel chain
/// `m_∞(ρ) ≤ sup P(ρ/r, ·, ·) m_1(r)`.
pub fn polar_case_check(
    profile: &PolarProfile,
    disk: &DiskExtender<f64>,
) -> Result<VerificationReport> {
    let (lambda, p, radius) = (profile.lambda, profile.p, profile.radius);
    if (disk.lambda().get() - lambda).abs() > 0.0 {
        return Err(LabError::invalid(
            "disk kernel and profile use different lambda",
        ));
    }
    let h_root = profile.h.powf(1.0 / p);
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in profile.r_nodes.iter().enumerate() {
        if r > radius && r < 5.0 * radius {
            let q = profile.m_inf[i] / h_root;
            if best.is_none_or(|(_, b)| q < b) {
                best = Some((i, q));
            }
        }
    }
    let (i0, _) = best.ok_or_else(|| LabError::invalid("profile has no radius inside (R, 5R)"))?;
    let params = SweepParams {
        p: Some(p),
        ..SweepParams::new(lambda)
    };
    let mut report = VerificationReport::new(
        "polar",
        "",
        params,
        profile.m_inf[i0],
        h_root,
        profile.n_theta as f64,
    )
    .with_extra("r0", profile.r_nodes[i0])
    .with_extra("h", profile.h);

    // m_1 ≤ m_∞^{1−p} m_p^p
    let mut interp = 0.0f64;
    for i in 0..profile.r_nodes.len() {
        let bound = profile.m_inf[i].powf(1.0 - p) * profile.m_p[i].powf(p);
        interp = interp.max((profile.m_1[i] - bound) / profile.m_1[i].max(f64::MIN_POSITIVE));
    }
    report = report.with_extra("interpolation_excess", interp);
    if interp > POLAR_QUAD_TOL {
        report.fail("interpolation_bound_violated");
    }

    // ∫_R^{5R} m_p^p dr/r ≤ K H with K = S 5^{2λ+2}/(2λ+2)
    let log_int: f64 = profile
        .log_weights
        .iter()
        .zip(&profile.m_p)
        .map(|(w, m)| w * m.powf(p))
        .sum();
    let k_bound =
        sine_power_integral(lambda + 0.5) * 5f64.powf(2.0 * lambda + 2.0) / (2.0 * lambda + 2.0);
    report = report
        .with_extra("log_integral_ratio", log_int / profile.h)
        .with_extra("log_integral_bound", k_bound);
    if log_int > k_bound * profile.h * (1.0 + POLAR_QUAD_TOL) {
        report.fail("log_integral_bound_violated");
    }

    // Jensen: mean of log g ≤ log of mean g for the measure dr/r on (R, 5R)
    let len: f64 = profile.log_weights.iter().sum();
    let mut log_mean = 0.0;
    let mut mean = 0.0;
    for (w, m) in profile.log_weights.iter().zip(&profile.m_p) {
        if *w > 0.0 {
            let g = m.powf(p) / profile.h;
            log_mean += w * g.ln();
            mean += w * g;
        }
    }
    let jensen_rhs = len * (mean / len).ln();
    report = report.with_extra("jensen_constant", log_mean - mean.ln());
    if log_mean > jensen_rhs + POLAR_QUAD_TOL * (1.0 + jensen_rhs.abs()) {
        report.fail("jensen_step_violated");
    }

    // m_∞(ρ) ≤ sup P(ρ/r) m_1(r)
    let mut sups: Vec<(f64, f64)> = Vec::new();
    let mut chain_constant = 0.0f64;
    let mut chain_excess = 0.0f64;
    for c in &profile.chain {
        let s = c.rho / c.r;
        let ksup = match sups.iter().find(|(k, _)| (k - s).abs() < 1e-12) {
            Some(&(_, v)) => v,
            None => {
                let v = kernel_sup(disk, s)?;
                sups.push((s, v));
                v
            }
        };
        chain_constant =
            chain_constant.max(c.m_inf_rho * (1.0 - s).powf(2.0 * lambda + 1.0) / c.m1_r);
        chain_excess = chain_excess.max(c.m_inf_rho / (ksup * c.m1_r) - 1.0);
    }
    report = report
        .with_extra("kernel_chain_constant", chain_constant)
        .with_extra("kernel_chain_excess", chain_excess);
    if chain_excess > POLAR_QUAD_TOL {
        report.fail("kernel_chain_violated");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LambdaParam;

    fn disk(l: f64) -> DiskExtender<f64> {
        let mut d = DiskExtender::new(LambdaParam::new(l).unwrap(), 16).unwrap();
        d.calibrate(&DiskExtender::default_probes()).unwrap();
        d
    }

    #[test]
    fn constant_function_profile() {
        let one = |_: f64, _: f64| Ok(1.0);
        for l in [0.3, 1.0, 2.0] {
            let prof = polar_quantities(&one, 3.0, 0.5, 0.5, l, 24).unwrap();
            assert!((prof.h - 1.0).abs() < 1e-12, "{l} {}", prof.h);
            let s = sine_power_integral(l + 0.5);
            assert!(prof
                .m_p
                .iter()
                .all(|m| (m - s.powf(2.0)).abs() < 1e-12 * s * s));
            assert!(prof.m_inf.iter().all(|&m| m == 1.0));
            let rep = polar_case_check(&prof, &disk(l)).unwrap();
            assert!(rep.status.passed, "{:?}", rep.status.flags);
            assert!((rep.ratio - 1.0).abs() < 1e-12);
            // ∫_R^{5R} S dr/r = S ln 5
            assert!((rep.extra["log_integral_ratio"] - s * 5f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_polynomial_passes_all_checks() {
        let l = 1.0;
        let u = |t: f64, x: f64| Ok(3.0 * t * t - x * x + 1.0);
        let prof = polar_quantities(&u, 2.0, 0.3, 0.5, l, 32).unwrap();
        let rep = polar_case_check(&prof, &disk(l)).unwrap();
        assert!(rep.status.passed, "{:?} {:?}", rep.status.flags, rep.extra);
        let r0 = rep.extra["r0"];
        assert!(r0 > 0.3 && r0 < 1.5);
    }

    #[test]
    fn kernel_sup_grows_like_the_predicted_power() {
        let d = disk(1.0);
        let a = kernel_sup(&d, 0.9).unwrap();
        let b = kernel_sup(&d, 0.99).unwrap();
        let slope = (b / a).ln() / 10f64.ln();
        assert!((slope - 3.0).abs() < 0.3, "{slope}");
    }

    #[test]
    fn rejects_bad_geometry() {
        let one = |_: f64, _: f64| Ok(1.0);
        assert!(polar_quantities(&one, 1.0, 0.5, 0.5, 1.0, 16).is_err());
        assert!(polar_quantities(&one, 5.0, 0.5, 1.5, 1.0, 16).is_err());
    }
}
