//! Parameter sweeps over the verifiers, as run by `bessel-lab verify`.
//!
//! A run is a pure function of its [`SuiteConfig`]: balls are drawn from a
//! seeded xoshiro stream and parallel work is collected in input order, so
//! the JSON output is byte-identical across runs and thread counts.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    family_member, mean_zero_dipole, standard_family, BoundaryFunction, DIPOLE_NAME,
};
use crate::error::{LabError, Result};
use crate::extension::{DiskExtender, ExtensionOptions, PoissonExtender};
use crate::geometry::{measure_ball, LambdaParam, QuarterBall};
use crate::grid::{csv_float, uniform_nodes, HarmonicGrid, Provenance};
use crate::report::to_json_pretty;
use crate::verifiers::studies::oracle_cross_check;
use crate::verifiers::{
    default_tau, iteration_demo, lattice_integral, lattice_sup, polar_case_check, polar_quantities,
    relative_change, verify_caccioppoli, verify_domination, verify_l2_moser, verify_moser,
    verify_norm_equivalence, verify_sobolev, IterationInput, MaximalData, Shape, ShapeOnBall,
    VerificationReport,
};

/// Largest accepted relative change of a group maximum under refinement.
pub const REFINEMENT_DRIFT_LIMIT: f64 = 0.10;
/// Largest accepted relative spread of a Sobolev ratio across radii.
pub const SCALE_SPREAD_LIMIT: f64 = 0.05;
/// Accepted range of the observed finite-difference order.
pub const ORACLE_ORDER_RANGE: (f64, f64) = (1.7, 2.3);

/// Lattice `[0.25, 6.25] × [0, 6]` of the ball suites.
pub const BALL_BOX: ((f64, f64), (f64, f64)) = ((0.25, 6.25), (0.0, 6.0));
const RADIUS_RANGE: (f64, f64) = (0.1, 0.25);
const ITERATION_BALL: (f64, f64, f64) = (2.5, 2.0, 0.5);
const ITERATION_STEPS: usize = 30;
const L2_ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];
const SOBOLEV_RADII: [f64; 3] = [0.1, 1.0, 10.0];
const POLAR_CENTER: f64 = 1.5;
const POLAR_RADIUS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Moser,
    Caccioppoli,
    Sobolev,
    L2moser,
    Iteration,
    Polar,
    Domination,
    Normequiv,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Moser,
        Suite::Caccioppoli,
        Suite::Sobolev,
        Suite::L2moser,
        Suite::Iteration,
        Suite::Polar,
        Suite::Domination,
        Suite::Normequiv,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Moser => "moser",
            Suite::Caccioppoli => "caccioppoli",
            Suite::Sobolev => "sobolev",
            Suite::L2moser => "l2moser",
            Suite::Iteration => "iteration",
            Suite::Polar => "polar",
            Suite::Domination => "domination",
            Suite::Normequiv => "normequiv",
            Suite::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| LabError::InvalidInput(format!("unknown suite `{s}`")))
    }
}

/// Everything a run depends on; echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    pub family: Vec<String>,
    /// Lattice nodes per unit length at the finest level (angles per
    /// half-circle for `polar`). The coarse level uses half of it.
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub seed: u64,
    /// Random balls per λ.
    pub balls: usize,
}

impl SuiteConfig {
    pub fn defaults(suite: Suite) -> Self {
        let (p, q, resolution) = match suite {
            Suite::Moser => (vec![0.5, 1.0, 2.0, 4.0], vec![], 64),
            Suite::Iteration => (vec![1.0], vec![], 64),
            Suite::Polar => (vec![0.5, 1.0], vec![], 32),
            Suite::Domination => (vec![], vec![0.3, 0.5, 0.8], 32),
            Suite::Normequiv => (vec![], vec![], 32),
            Suite::Sobolev => (vec![], vec![], 0),
            _ => (vec![], vec![], 64),
        };
        Self {
            suite,
            lambdas: vec![0.3, 1.0, 2.0],
            p,
            q,
            family: standard_family::<f64>()
                .into_iter()
                .map(|(n, _)| n.to_string())
                .collect(),
            resolution,
            tau: None,
            seed: 0x5eed,
            balls: 40,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidInput(msg));
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad(format!(
                "lambda values must be positive, got {:?}",
                self.lambdas
            ));
        }
        if self.p.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return bad(format!("p values must be positive, got {:?}", self.p));
        }
        if self.q.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return bad(format!("q values must lie in (0, 1), got {:?}", self.q));
        }
        for name in &self.family {
            family_member(name)?;
        }
        let needs_lattice = !matches!(self.suite, Suite::Sobolev);
        if needs_lattice && (self.resolution < 8 || !self.resolution.is_multiple_of(2)) {
            return bad(format!(
                "resolution must be even and at least 8, got {}",
                self.resolution
            ));
        }
        if matches!(self.suite, Suite::Moser | Suite::Iteration | Suite::Polar) && self.p.is_empty()
        {
            return bad(format!("suite {} needs at least one p", self.suite));
        }
        if matches!(self.suite, Suite::Domination) && self.q.is_empty() {
            return bad("suite domination needs at least one q".into());
        }
        if matches!(
            self.suite,
            Suite::Moser | Suite::Caccioppoli | Suite::L2moser
        ) && self.balls == 0
        {
            return bad("ball count must be positive".into());
        }
        Ok(())
    }
}

/// Maximum of the ratio over a group of reports, per refinement level (or
/// per radius for scale groups).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: String,
    pub levels: Vec<f64>,
    /// Relative change between the last two levels, or the relative spread
    /// across radii.
    pub drift: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub passed: bool,
    pub groups: Vec<GroupSummary>,
    pub reports: Vec<VerificationReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        to_json_pretty(self)
    }

    /// One line per failing report or group.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.reports {
            if !(r.status.passed && r.status.finite) {
                out.push(format!(
                    "{} [{}] λ={}: {}",
                    r.suite,
                    r.label,
                    r.params.lambda,
                    r.status.flags.join(", ")
                ));
            }
        }
        for g in &self.groups {
            if !g.passed {
                out.push(format!(
                    "group {}: drift {:.3e} exceeds {}",
                    g.key, g.drift, g.limit
                ));
            }
        }
        out
    }
}

/// Exit status for an error: 2 for bad configuration, 3 for numerical failure.
pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::InvalidInput(_) | LabError::OutsideGrid(_) | LabError::Io(_) => 2,
        LabError::NonConvergence { .. }
        | LabError::NonFinite(_)
        | LabError::Constraint(_)
        | LabError::UnresolvedTail(_) => 3,
    }
}

fn refinement_groups<K: Fn(&VerificationReport) -> String>(
    reports: &[VerificationReport],
    key: K,
) -> Vec<GroupSummary> {
    let mut keys: Vec<String> = Vec::new();
    let mut levels: Vec<Vec<f64>> = Vec::new();
    for r in reports {
        let k = key(r);
        let idx = match keys.iter().position(|x| *x == k) {
            Some(i) => i,
            None => {
                keys.push(k);
                levels.push(vec![f64::NEG_INFINITY; r.refinement.len()]);
                keys.len() - 1
            }
        };
        for (slot, level) in levels[idx].iter_mut().zip(&r.refinement) {
            *slot = slot.max(level.ratio);
        }
    }
    keys.into_iter()
        .zip(levels)
        .map(|(key, levels)| {
            let n = levels.len();
            let drift = if n >= 2 {
                relative_change(levels[n - 2], levels[n - 1])
            } else {
                f64::NAN
            };
            GroupSummary {
                key,
                passed: drift < REFINEMENT_DRIFT_LIMIT,
                levels,
                drift,
                limit: REFINEMENT_DRIFT_LIMIT,
            }
        })
        .collect()
}

fn regime_name(r: &VerificationReport) -> &'static str {
    match r.params.ball.map(|b| b.regime) {
        Some(crate::geometry::BallRegime::FarFromAxis) => "far",
        Some(crate::geometry::BallRegime::NearAxis) => "near",
        None => "none",
    }
}

fn fmt_key(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let (reports, groups) = match cfg.suite {
        Suite::Moser => {
            let reports = ball_suite(cfg, false)?;
            let groups = refinement_groups(&reports, |r| {
                format!(
                    "lambda={}/p={}/{}",
                    r.params.lambda,
                    fmt_key(r.params.p),
                    regime_name(r)
                )
            });
            (reports, groups)
        }
        Suite::Caccioppoli => {
            let reports = ball_suite(cfg, false)?;
            let with_balls: Vec<VerificationReport> = reports
                .iter()
                .filter(|r| r.params.ball.is_some() && r.label != "constant")
                .cloned()
                .collect();
            let groups = refinement_groups(&with_balls, |r| {
                format!("lambda={}/{}", r.params.lambda, regime_name(r))
            });
            (reports, groups)
        }
        Suite::L2moser => {
            let reports = ball_suite(cfg, true)?;
            let groups = refinement_groups(&reports, |r| {
                format!(
                    "lambda={}/alpha={}",
                    r.params.lambda,
                    fmt_key(r.params.alpha)
                )
            });
            (reports, groups)
        }
        Suite::Sobolev => sobolev_suite()?,
        Suite::Iteration => {
            let reports = iteration_suite(cfg)?;
            let groups = refinement_groups(&reports, |r| {
                format!("lambda={}/p={}", r.params.lambda, fmt_key(r.params.p))
            });
            (reports, groups)
        }
        Suite::Polar => {
            let reports = polar_suite(cfg)?;
            let groups = refinement_groups(&reports, |r| {
                format!("lambda={}/p={}", r.params.lambda, fmt_key(r.params.p))
            });
            (reports, groups)
        }
        Suite::Domination => {
            let reports = maximal_suite(cfg)?;
            let mut groups = refinement_groups(&reports, |r| {
                format!("lambda={}/q={}", r.params.lambda, fmt_key(r.params.q))
            });
            groups.extend(refinement_groups(&reports, |r| {
                format!(
                    "lambda={}/q={}/{}",
                    r.params.lambda,
                    fmt_key(r.params.q),
                    r.label
                )
            }));
            (reports, groups)
        }
        Suite::Normequiv => {
            let reports = maximal_suite(cfg)?;
            let mut groups = refinement_groups(&reports, |r| format!("lambda={}", r.params.lambda));
            groups.extend(refinement_groups(&reports, |r| {
                format!("lambda={}/{}", r.params.lambda, r.label)
            }));
            (reports, groups)
        }
        Suite::Oracle => (oracle_suite(cfg)?, Vec::new()),
    };
    let passed = reports.iter().all(|r| r.status.passed && r.status.finite)
        && groups.iter().all(|g| g.passed);
    Ok(SuiteReport {
        config: cfg.clone(),
        passed,
        groups,
        reports,
    })
}

fn extender(lambda: f64) -> Result<PoissonExtender<f64>> {
    PoissonExtender::new(LambdaParam::new(lambda)?, ExtensionOptions::default())
}

fn members(cfg: &SuiteConfig) -> Result<Vec<(String, BoundaryFunction<f64>)>> {
    cfg.family
        .iter()
        .map(|n| Ok((n.clone(), family_member(n)?)))
        .collect()
}

/// The extension of `f` on the ball-suite lattice with `n` nodes per unit.
pub fn ball_grid(
    ext: &PoissonExtender<f64>,
    f: &BoundaryFunction<f64>,
    n: usize,
) -> Result<HarmonicGrid<f64>> {
    let ((t0, t1), (x0, x1)) = BALL_BOX;
    let ts = uniform_nodes(t0, t1, ((t1 - t0) * n as f64).round() as usize + 1);
    let xs = uniform_nodes(x0, x1, ((x1 - x0) * n as f64).round() as usize + 1);
    ext.extend(f, &ts, &xs)
}

/// Seeded balls with `R` log-uniform in `[0.1, 0.25]`, alternating between
/// the far (`R ≤ x₀/4`) and near (`R > x₀/4`) regimes, with the `12R`
/// ball inside the lattice up to clipping at the axis.
pub fn sample_balls(count: usize, seed: u64) -> Vec<QuarterBall<f64>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let ((t0, t1), (_, x1)) = BALL_BOX;
    (0..count)
        .map(|k| {
            let (lo, hi) = RADIUS_RANGE;
            let r = (lo.ln() + (hi / lo).ln() * rng.random::<f64>()).exp();
            let big = 12.0 * r;
            let t = t0 + big + (t1 - t0 - 2.0 * big) * rng.random::<f64>();
            let u: f64 = rng.random();
            let x = if k % 2 == 0 {
                4.0 * r + (x1 - big - 4.0 * r) * u
            } else {
                4.0 * r * u
            };
            QuarterBall {
                t0: t,
                x0: x,
                radius: r,
            }
        })
        .collect()
}

/// Balls with `r ≤ x₀/2` inside the lattice.
pub fn sample_interior_balls(count: usize, seed: u64) -> Vec<QuarterBall<f64>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let ((t0, t1), (_, x1)) = BALL_BOX;
    (0..count)
        .map(|_| {
            let (lo, hi) = RADIUS_RANGE;
            let r = (lo.ln() + (hi / lo).ln() * rng.random::<f64>()).exp();
            let t = t0 + r + (t1 - t0 - 2.0 * r) * rng.random::<f64>();
            let x = 2.0 * r + (x1 - 3.0 * r) * rng.random::<f64>();
            QuarterBall {
                t0: t,
                x0: x,
                radius: r,
            }
        })
        .collect()
}

fn with_label(mut r: VerificationReport, label: &str) -> VerificationReport {
    r.label = label.to_string();
    r.params.family = Some(label.to_string());
    r
}

/// Moser, Caccioppoli or L² Moser over seeded balls, at two resolutions.
fn ball_suite(cfg: &SuiteConfig, interior: bool) -> Result<Vec<VerificationReport>> {
    let balls = if interior {
        sample_interior_balls(cfg.balls, cfg.seed)
    } else {
        sample_balls(cfg.balls, cfg.seed)
    };
    let levels = [cfg.resolution / 2, cfg.resolution];
    let mut out = Vec::new();
    for &lambda in &cfg.lambdas {
        let ext = extender(lambda)?;
        for (name, f) in members(cfg)? {
            let grids = levels
                .iter()
                .map(|&n| ball_grid(&ext, &f, n))
                .collect::<Result<Vec<_>>>()?;
            let per_ball = balls
                .par_iter()
                .map(|ball| {
                    let run = |g: &HarmonicGrid<f64>| -> Result<Vec<VerificationReport>> {
                        match cfg.suite {
                            Suite::Moser => {
                                cfg.p.iter().map(|&p| verify_moser(g, ball, p)).collect()
                            }
                            Suite::Caccioppoli => Ok(vec![verify_caccioppoli(g, ball)?]),
                            _ => L2_ALPHAS
                                .iter()
                                .map(|&a| verify_l2_moser(g, ball, a))
                                .collect(),
                        }
                    };
                    let coarse = run(&grids[0])?;
                    let fine = run(&grids[1])?;
                    Ok(coarse
                        .into_iter()
                        .zip(fine)
                        .map(|(c, f)| with_label(c.refine(f), &name))
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            out.extend(per_ball.into_iter().flatten());
        }
        if cfg.suite == Suite::Caccioppoli {
            out.push(constant_caccioppoli(lambda, &levels, &balls[0])?);
        }
    }
    Ok(out)
}

/// `u ≡ 1` has a vanishing difference gradient, so the left side is zero.
fn constant_caccioppoli(
    lambda: f64,
    levels: &[usize],
    ball: &QuarterBall<f64>,
) -> Result<VerificationReport> {
    let ((t0, t1), (x0, x1)) = BALL_BOX;
    let mut report: Option<VerificationReport> = None;
    for &n in levels {
        let g = HarmonicGrid::from_fn(
            uniform_nodes(t0, t1, ((t1 - t0) * n as f64).round() as usize + 1),
            uniform_nodes(x0, x1, ((x1 - x0) * n as f64).round() as usize + 1),
            LambdaParam::new(lambda)?,
            Provenance::Analytic,
            |_, _| 1.0,
        )?;
        let r = verify_caccioppoli(&g, ball)?;
        report = Some(match report {
            None => r,
            Some(prev) => prev.refine(r),
        });
    }
    let mut r = with_label(report.expect("at least one level"), "constant");
    if r.refinement.iter().any(|l| l.lhs != 0.0) {
        r.fail("constant_gradient_not_zero");
    }
    Ok(r)
}

fn sobolev_suite() -> Result<(Vec<VerificationReport>, Vec<GroupSummary>)> {
    let shapes = [
        Shape::Constant,
        Shape::LinearT,
        Shape::Bump,
        Shape::Quadratic,
    ];
    let mut reports = Vec::new();
    let mut groups = Vec::new();
    for shape in shapes {
        let mut ratios = Vec::new();
        for &r in &SOBOLEV_RADII {
            let ball = QuarterBall::new(3.0 * r, 3.0 * r, r)?;
            let field = ShapeOnBall {
                shape,
                t0: ball.t0,
                x0: ball.x0,
                scale: r,
            };
            let name = serde_json::to_value(shape)?
                .as_str()
                .unwrap_or_default()
                .to_string();
            let rep = with_label(verify_sobolev(&field, &ball)?, &name);
            ratios.push(rep.ratio);
            reports.push(rep);
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let drift = (hi - lo) / lo;
        groups.push(GroupSummary {
            key: format!(
                "shape={}",
                reports.last().map(|r| r.label.clone()).unwrap_or_default()
            ),
            levels: ratios,
            drift,
            limit: SCALE_SPREAD_LIMIT,
            passed: drift < SCALE_SPREAD_LIMIT,
        });
    }
    Ok((reports, groups))
}

/// The iteration demo on the ball `B((2.5, 2), 0.5)` for every datum, at two
/// resolutions.
fn iteration_suite(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let (tc, xc, radius) = ITERATION_BALL;
    let ball = QuarterBall::new(tc, xc, radius)?;
    let mut out = Vec::new();
    for &lambda in &cfg.lambdas {
        let lam = LambdaParam::new(lambda)?;
        let ext = extender(lambda)?;
        for &p in &cfg.p {
            let tau = cfg.tau.unwrap_or_else(|| default_tau(lam, p));
            // rejects a divergent series before any grid is built
            crate::verifiers::iteration_constant(lam, p, tau)?;
        }
        for (name, f) in members(cfg)? {
            let grids = [cfg.resolution / 2, cfg.resolution]
                .iter()
                .map(|&n| ball_grid(&ext, &f, n))
                .collect::<Result<Vec<_>>>()?;
            for &p in &cfg.p {
                let tau = cfg.tau.unwrap_or_else(|| default_tau(lam, p));
                let mut report: Option<VerificationReport> = None;
                for g in &grids {
                    let sup = |r: f64| lattice_sup(g, &ball.with_radius(r)).map(|(s, _)| s);
                    let measure = |r: f64| measure_ball(&ball.with_radius(r), lambda, 1e-10);
                    let big = ball.with_radius(2.0 * radius);
                    let lp =
                        lattice_integral(&g.t_nodes, &g.x_nodes, &g.values, &big, lambda, |v| {
                            v.abs().powf(p)
                        })?
                        .powf(1.0 / p);
                    let input = IterationInput {
                        sup_on_ball: &sup,
                        measure: &measure,
                        lp_norm: lp,
                        radius,
                    };
                    let mut r = iteration_demo(&input, lam, p, tau, ITERATION_STEPS)?;
                    r.refinement[0].resolution = ((g.x_nodes.len() - 1) as f64 / 6.0).round();
                    report = Some(match report {
                        None => r,
                        Some(prev) => prev.refine(r),
                    });
                }
                let mut r = with_label(report.expect("two levels"), &name);
                r.params.ball = Some((&ball).into());
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// The near-axis argument about `(1.5, 0)` with `R = 0.25`, at `n/2` and
/// `n` angles per half-circle.
fn polar_suite(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for &lambda in &cfg.lambdas {
        let ext = extender(lambda)?;
        let mut disk = DiskExtender::new(LambdaParam::new(lambda)?, 16)?;
        disk.calibrate(&DiskExtender::default_probes())?;
        for (name, f) in members(cfg)? {
            let u = |t: f64, x: f64| ext.value(&f, t, x);
            for &p in &cfg.p {
                if p > 1.0 {
                    return Err(LabError::InvalidInput(format!(
                        "polar suite needs p in (0, 1], got {p}"
                    )));
                }
                let mut report: Option<VerificationReport> = None;
                for n in [cfg.resolution / 2, cfg.resolution] {
                    let profile = polar_quantities(&u, POLAR_CENTER, POLAR_RADIUS, p, lambda, n)?;
                    let r = polar_case_check(&profile, &disk)?;
                    report = Some(match report {
                        None => r,
                        Some(prev) => prev.refine(r),
                    });
                }
                let mut r = with_label(report.expect("two levels"), &name);
                let (a, _) = f.support();
                r.extra.insert("support_start".into(), a);
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// Domination or norm equivalence at spacings `2/n` and `1/n`.
fn maximal_suite(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    let hs = [2.0 / cfg.resolution as f64, 1.0 / cfg.resolution as f64];
    for &lambda in &cfg.lambdas {
        let ext = extender(lambda)?;
        let mut data_set = members(cfg)?;
        if cfg.suite == Suite::Normequiv {
            data_set.push((DIPOLE_NAME.to_string(), mean_zero_dipole(lambda)?));
        }
        for (name, f) in data_set {
            let data = hs
                .iter()
                .map(|&h| MaximalData::compute(&ext, &f, h))
                .collect::<Result<Vec<_>>>()?;
            if cfg.suite == Suite::Domination {
                for &q in &cfg.q {
                    let r = verify_domination(&data[0], q)?.refine(verify_domination(&data[1], q)?);
                    out.push(with_label(r, &name));
                }
            } else {
                let mut r =
                    verify_norm_equivalence(&data[0])?.refine(verify_norm_equivalence(&data[1])?);
                // recompute from 3f on the coarse lattice: the ratio must not move
                let tripled = MaximalData::compute(&ext, &f.scaled(3.0), hs[0])?;
                let r3 = verify_norm_equivalence(&tripled)?;
                r.extra.insert("ratio_tripled".into(), r3.ratio);
                if r3.ratio != r.refinement[0].ratio {
                    r.fail("scaling_not_exact");
                }
                out.push(with_label(r, &name));
            }
        }
    }
    Ok(out)
}

/// Finite differences against the extension on `[0.5, 1.5] × [1, 3]` with
/// spacings `1/8, …, 1/n`.
fn oracle_suite(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let mut spacings = vec![0.125];
    while *spacings.last().expect("nonempty") > 1.0 / cfg.resolution as f64 + 1e-15 {
        spacings.push(spacings.last().expect("nonempty") / 2.0);
    }
    if spacings.len() < 3 {
        return Err(LabError::InvalidInput(format!(
            "oracle suite needs resolution >= 32 for three levels, got {}",
            cfg.resolution
        )));
    }
    let mut out = Vec::new();
    for &lambda in &cfg.lambdas {
        let ext = extender(lambda)?;
        for (name, f) in members(cfg)? {
            let s = oracle_cross_check(&ext, &f, &spacings)?;
            let mut r = VerificationReport::new(
                "oracle",
                name.clone(),
                crate::verifiers::SweepParams::new(lambda),
                *s.errors.last().expect("levels"),
                s.errors[0],
                cfg.resolution as f64,
            );
            r.refinement.clear();
            for (k, (&h, &e)) in s.h.iter().zip(&s.errors).enumerate() {
                r.refinement.push(crate::verifiers::RefinementLevel {
                    resolution: 1.0 / h,
                    lhs: e,
                    rhs: s.errors[0],
                    ratio: e / s.errors[0],
                });
                r.extra.insert(
                    format!("max_principle_excess_{k}"),
                    s.max_principle_excess[k],
                );
            }
            for (k, &o) in s.orders.iter().enumerate() {
                r.extra.insert(format!("order_{k}"), o);
            }
            let last = *s.orders.last().expect("orders");
            let (lo, hi) = ORACLE_ORDER_RANGE;
            if !(last >= lo && last <= hi) {
                r.fail(format!("order_{last:.3}_outside_range"));
            }
            if s.max_principle_excess.iter().any(|&e| e > 0.0) {
                r.fail("maximum_principle_violated");
            }
            r.params.family = Some(name);
            out.push(r);
        }
    }
    Ok(out)
}

/// Resolves a family selector: `all`, or a comma list of member names or
/// their leading word (`tent` for `tent_1_3`).
pub fn resolve_family(selector: &str) -> Result<Vec<String>> {
    let names: Vec<&str> = standard_family::<f64>()
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    if selector.trim() == "all" {
        return Ok(names.iter().map(|n| n.to_string()).collect());
    }
    let mut out = Vec::new();
    for item in selector.split(',').map(str::trim) {
        let hits: Vec<&&str> = names
            .iter()
            .filter(|n| {
                **n == item
                    || n.strip_prefix(item)
                        .is_some_and(|rest| rest.starts_with('_'))
            })
            .collect();
        match hits.as_slice() {
            [one] => out.push(one.to_string()),
            [] => {
                return Err(LabError::InvalidInput(format!(
                    "unknown family member `{item}` (known: {})",
                    names.join(", ")
                )))
            }
            _ => {
                return Err(LabError::InvalidInput(format!(
                    "family selector `{item}` is ambiguous"
                )))
            }
        }
    }
    Ok(out)
}

/// One CSV row per report.
pub fn summary_csv(report: &SuiteReport) -> String {
    let opt = |v: Option<f64>| v.map(csv_float).unwrap_or_default();
    let mut out = String::from("suite,label,lambda,p,q,alpha,lhs,rhs,ratio,drift,passed\n");
    for r in &report.reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.suite,
            r.label,
            csv_float(r.params.lambda),
            opt(r.params.p),
            opt(r.params.q),
            opt(r.params.alpha),
            csv_float(r.lhs),
            csv_float(r.rhs),
            csv_float(r.ratio),
            opt(r.drift()),
            r.status.passed && r.status.finite
        ));
    }
    out
}

fn num(v: &serde_json::Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for key in path {
        match cur.get(key) {
            Some(next) => cur = next,
            None => return f64::NAN,
        }
    }
    cur.as_f64().unwrap_or(f64::NAN)
}

/// Plot-ready CSV from a suite report as written by [`SuiteReport::to_json`]:
/// `lambda,p,R,x0,ratio` per ball for `moser`, and per-node
/// `lambda,q,family,x,R,N,bound,C` for `domination`.
pub fn plot_rows(report: &serde_json::Value) -> Result<String> {
    let suite = report
        .pointer("/config/suite")
        .and_then(|s| s.as_str())
        .ok_or_else(|| LabError::InvalidInput("report lacks config.suite".into()))?;
    let reports = report
        .get("reports")
        .and_then(|r| r.as_array())
        .ok_or_else(|| LabError::InvalidInput("report lacks a reports array".into()))?;
    let mut out = String::new();
    match suite {
        "moser" => {
            out.push_str("lambda,p,R,x0,ratio\n");
            for r in reports {
                let row = [
                    num(r, &["params", "lambda"]),
                    num(r, &["params", "p"]),
                    num(r, &["params", "ball", "radius"]),
                    num(r, &["params", "ball", "x0"]),
                    num(r, &["ratio"]),
                ];
                out.push_str(&row.map(csv_float).join(","));
                out.push('\n');
            }
        }
        "domination" => {
            out.push_str("lambda,q,family,x,R,N,bound,C\n");
            for r in reports {
                let prof = r.get("profile").ok_or_else(|| {
                    LabError::InvalidInput("domination report without profile".into())
                })?;
                let col = |k: &str| -> Vec<f64> {
                    prof.get(k)
                        .and_then(|c| c.as_array())
                        .map(|c| c.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
                        .unwrap_or_default()
                };
                let (x, rad, nt, bound) =
                    (col("x"), col("radial"), col("nontangential"), col("bound"));
                let label = r.get("label").and_then(|l| l.as_str()).unwrap_or_default();
                for (i, &xi) in x.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{label},{},{},{},{},{}\n",
                        csv_float(num(r, &["params", "lambda"])),
                        csv_float(num(r, &["params", "q"])),
                        csv_float(xi),
                        csv_float(rad.get(i).copied().unwrap_or(f64::NAN)),
                        csv_float(nt.get(i).copied().unwrap_or(f64::NAN)),
                        csv_float(bound.get(i).copied().unwrap_or(f64::NAN)),
                        csv_float(num(prof, &["constant"]))
                    ));
                }
            }
        }
        other => {
            return Err(LabError::InvalidInput(format!(
                "plot data exists for moser and domination reports, not {other}"
            )));
        }
    }
    Ok(out)
}
