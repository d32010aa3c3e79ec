//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero
//! exit status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bessel_lab::boundary::{standard_family, DIPOLE_NAME};
use bessel_lab::extension::{ExtensionOptions, PoissonExtender};
use bessel_lab::geometry::LambdaParam;
use bessel_lab::grid::uniform_nodes;
use bessel_lab::suite::{run_suite, Suite, SuiteConfig, SuiteReport, ORACLE_ORDER_RANGE};
use bessel_lab::verifiers::studies::{
    analytic_residuals, disk_reproduction, harmonicity_study, kernel_sup_exponent,
};
use bessel_lab::verifiers::{iteration_constant, iteration_partial_sum};

const LAMBDAS: [f64; 3] = [0.3, 1.0, 2.0];

type Outcome = Result<String, String>;

fn lam(l: f64) -> LambdaParam<f64> {
    LambdaParam::new(l).expect("positive lambda")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn suite(s: Suite) -> Result<SuiteReport, String> {
    run_suite(&SuiteConfig::defaults(s)).map_err(|e| format!("{s} suite errored: {e}"))
}

fn max_drift(r: &SuiteReport) -> f64 {
    r.groups.iter().map(|g| g.drift).fold(0.0, f64::max)
}

fn suite_outcome(r: &SuiteReport, extra: &str) -> Outcome {
    let failures = r.failures();
    check(
        r.passed,
        if failures.is_empty() {
            format!(
                "{} reports, {} groups, max drift {:.3e}{extra}",
                r.reports.len(),
                r.groups.len(),
                max_drift(r)
            )
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    )
}

fn harmonicity() -> Outcome {
    let start = Instant::now();
    let mut worst_order = f64::INFINITY;
    let mut worst_scaled = 0.0f64;
    for l in LAMBDAS {
        let ext =
            PoissonExtender::new(lam(l), ExtensionOptions::default()).map_err(|e| e.to_string())?;
        for (name, f) in standard_family::<f64>() {
            let s = harmonicity_study(&ext, &f).map_err(|e| format!("{name} λ={l}: {e}"))?;
            worst_order = worst_order.min(s.min_order());
            worst_scaled = worst_scaled.max(s.scaled_finest);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_order >= 1.8 && worst_scaled <= 1e-4 && secs <= 300.0,
        format!("min order {worst_order:.4}, max scaled residual {worst_scaled:.3e}, {secs:.1} s"),
    )
}

fn analytic() -> Outcome {
    let lattices = [
        (uniform_nodes(0.5, 2.5, 41), uniform_nodes(0.3, 3.3, 61)),
        (uniform_nodes(0.1, 1.1, 17), uniform_nodes(0.05, 4.05, 129)),
        (uniform_nodes(1.0, 9.0, 9), uniform_nodes(2.0, 5.0, 4)),
    ];
    let mut worst = 0.0f64;
    for l in LAMBDAS {
        for (ts, xs) in &lattices {
            for (_, r) in analytic_residuals(lam(l), ts, xs).map_err(|e| e.to_string())? {
                worst = worst.max(r);
            }
        }
    }
    check(worst <= 1e-9, format!("max residual {worst:.3e}"))
}

fn disk() -> Outcome {
    let mut worst = 0.0f64;
    let mut spread = 0.0f64;
    for l in LAMBDAS {
        let s = disk_reproduction(lam(l), 0.3, 50, 2024).map_err(|e| e.to_string())?;
        worst = worst.max(s.max_error);
        spread = spread.max(s.calibration.spread);
    }
    check(
        worst <= 1e-6 && spread <= 1e-6,
        format!("max error {worst:.3e} at 50 points, normalization spread {spread:.3e}"),
    )
}

fn kernel_exponent() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for l in LAMBDAS {
        let fit = kernel_sup_exponent(lam(l)).map_err(|e| e.to_string())?;
        ok &= fit.exponent >= 2.0 * l + 0.7 && fit.exponent <= 2.0 * l + 1.3;
        detail.push(format!("λ={l}: {:.4}", fit.exponent));
    }
    check(ok, detail.join(", "))
}

fn moser() -> Outcome {
    let r = suite(Suite::Moser)?;
    let finite = r
        .reports
        .iter()
        .all(|x| x.refinement.iter().all(|l| l.ratio.is_finite()));
    let far = r
        .reports
        .iter()
        .filter(|x| x.params.ball.is_some_and(|b| b.radius <= 0.25 * b.x0))
        .count();
    let near = r.reports.len() - far;
    let balls_ok = r.config.balls >= 40 && far > 0 && near > 0;
    let out = suite_outcome(&r, &format!(", {far} far / {near} near"));
    if finite && balls_ok {
        out
    } else {
        Err(format!("finite {finite}, ball sweep ok {balls_ok}"))
    }
}

fn caccioppoli() -> Outcome {
    let r = suite(Suite::Caccioppoli)?;
    let constant_zero = r
        .reports
        .iter()
        .filter(|x| x.label == "constant")
        .all(|x| x.refinement.iter().all(|l| l.lhs == 0.0));
    let n_const = r.reports.iter().filter(|x| x.label == "constant").count();
    let out = suite_outcome(
        &r,
        &format!(", constant-u lhs exactly 0 in {n_const} cases"),
    );
    if constant_zero && n_const > 0 {
        out
    } else {
        Err("constant case has nonzero gradient integral".into())
    }
}

fn iteration() -> Outcome {
    // τ is placed so that the series ratio q = τ^{-(2λ+1)/p}/2 is 0.55, 2/3
    // (the default τ) or 4/5; the 200-term tail q^200/(1 − q) is then far
    // below the tolerance
    let mut worst = 0.0f64;
    for l in LAMBDAS {
        for p in [0.5, 1.0, 1.5] {
            for q in [0.55, 2.0 / 3.0, 0.8] {
                let tau = (2.0f64 * q).powf(-p / (2.0 * l + 1.0));
                let c = iteration_constant(lam(l), p, tau).map_err(|e| e.to_string())?;
                let s = iteration_partial_sum(lam(l), p, tau, 200).map_err(|e| e.to_string())?;
                worst = worst.max((c - s).abs() / c);
            }
        }
    }
    let rejected = [0.5, 0.0, 1.0, -0.1]
        .iter()
        .all(|&tau| iteration_constant(lam(1.0), 1.0, tau).is_err());
    let r = suite(Suite::Iteration)?;
    let gaps_ok = r
        .reports
        .iter()
        .all(|x| x.extra.get("gap").is_some_and(|&g| g >= 0.0));
    let out = suite_outcome(
        &r,
        &format!(", closed form vs 200 terms {worst:.2e}, gaps nonnegative"),
    );
    match out {
        Ok(d) if worst <= 1e-12 && rejected && gaps_ok => Ok(d),
        Ok(d) => Err(format!(
            "{d}; sum ok {}, rejected {rejected}, gaps {gaps_ok}",
            worst <= 1e-12
        )),
        e => e,
    }
}

fn polar() -> Outcome {
    let r = suite(Suite::Polar)?;
    let constant = r.reports.iter().map(|x| x.ratio).fold(0.0, f64::max);
    suite_outcome(
        &r,
        &format!(", family-wide m_inf/H^(1/p) max {constant:.4}"),
    )
}

fn domination() -> Outcome {
    let r = suite(Suite::Domination)?;
    let c = r.reports.iter().map(|x| x.ratio).fold(0.0, f64::max);
    suite_outcome(&r, &format!(", largest C {c:.4}"))
}

fn norm_equivalence() -> Outcome {
    // nonnegative data: truncated norms (their full norms diverge
    // logarithmically); the mean-zero dipole: full norms with fitted tails
    let r = suite(Suite::Normequiv)?;
    let lo = r
        .reports
        .iter()
        .map(|x| x.ratio)
        .fold(f64::INFINITY, f64::min);
    let hi = r.reports.iter().map(|x| x.ratio).fold(0.0, f64::max);
    let dipoles: Vec<_> = r
        .reports
        .iter()
        .filter(|x| x.label == DIPOLE_NAME)
        .collect();
    let resolved = dipoles.len() == r.config.lambdas.len()
        && dipoles
            .iter()
            .all(|x| x.extra.get("ratio_with_tails").is_some_and(|&v| v >= 1.0));
    let full: Vec<String> = dipoles
        .iter()
        .map(|x| {
            format!(
                "{:.4}",
                x.extra.get("ratio_with_tails").copied().unwrap_or(f64::NAN)
            )
        })
        .collect();
    let out = suite_outcome(
        &r,
        &format!(
            ", ratios in [{lo:.4}, {hi:.4}], mean-zero ratios with tails [{}], 3f invariance exact",
            full.join(", ")
        ),
    );
    if lo >= 1.0 && resolved {
        out
    } else {
        Err(format!("min ratio {lo}, dipole tails resolved {resolved}"))
    }
}

fn oracle() -> Outcome {
    let r = suite(Suite::Oracle)?;
    let (lo, hi) = ORACLE_ORDER_RANGE;
    let orders: Vec<f64> = r
        .reports
        .iter()
        .flat_map(|x| {
            x.extra
                .iter()
                .filter(|(k, _)| k.starts_with("order_"))
                .map(|(_, &v)| v)
        })
        .collect();
    let omin = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let omax = orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let excess = r
        .reports
        .iter()
        .flat_map(|x| {
            x.extra
                .iter()
                .filter(|(k, _)| k.starts_with("max_principle"))
                .map(|(_, &v)| v)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let out = suite_outcome(
        &r,
        &format!(", orders in [{omin:.3}, {omax:.3}], max principle excess {excess:.3e}"),
    );
    if omin >= lo && omax <= hi && excess <= 0.0 {
        out
    } else {
        Err(format!("orders [{omin}, {omax}], excess {excess}"))
    }
}

fn determinism() -> Outcome {
    let mut cfg = SuiteConfig::defaults(Suite::Moser);
    cfg.lambdas = vec![1.0];
    cfg.family = vec!["tent_1_3".into()];
    cfg.resolution = 16;
    cfg.balls = 8;
    let run = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| run_suite(&cfg).and_then(|r| r.to_json()))
            .map_err(|e| e.to_string())
    };
    let a = run(1)?;
    let b = run(1)?;
    let c = run(3)?;
    let mut dom = SuiteConfig::defaults(Suite::Domination);
    dom.lambdas = vec![0.3];
    dom.family = vec!["indicator_near_axis".into()];
    dom.resolution = 16;
    let d1 = run_suite(&dom)
        .and_then(|r| r.to_json())
        .map_err(|e| e.to_string())?;
    let d2 = run_suite(&dom)
        .and_then(|r| r.to_json())
        .map_err(|e| e.to_string())?;
    check(
        a == b && a == c && d1 == d2,
        format!("moser JSON {} bytes identical across reruns and thread counts; domination rerun identical", a.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1 harmonicity of extensions", harmonicity),
        ("2 analytic stencil exactness", analytic),
        ("3 disk representation", disk),
        ("4 kernel sup exponent", kernel_exponent),
        ("5 moser suite", moser),
        ("6 caccioppoli suite", caccioppoli),
        ("7 iteration", iteration),
        ("8 polar case", polar),
        ("9 domination", domination),
        ("10 norm equivalence", norm_equivalence),
        ("11 oracle cross-check", oracle),
        ("12 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  criterion {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
