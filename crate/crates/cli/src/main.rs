use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bessel_lab::boundary::{family_member, BoundaryFunction};
use bessel_lab::error::LabError;
use bessel_lab::extension::{ExtensionOptions, PoissonExtender};
use bessel_lab::geometry::LambdaParam;
use bessel_lab::grid::NodeSpec;
use bessel_lab::maximal::{hardy_littlewood_max, IntervalFamily, TSweep, SWEEP_RATIO};
use bessel_lab::suite::{
    exit_code, plot_rows, resolve_family, run_suite, summary_csv, Suite, SuiteConfig,
};
use bessel_lab::verifiers::{maximal_lattice, MaximalData};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Numerical laboratory for λ-harmonic functions.
#[derive(Parser)]
#[command(name = "bessel-lab", version)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "BESSEL_LAB_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poisson extension of boundary data on a (t, x) lattice.
    Extend(ExtendArgs),
    /// Radial, non-tangential or Hardy–Littlewood maximal profile.
    Maximal(MaximalArgs),
    /// Run a verification suite and write JSON and CSV reports.
    Verify(VerifyArgs),
    /// Flatten suite reports into plot-ready CSV files.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct DatumArgs {
    /// Boundary data: indicator:a,b | tent:a,b | gauss:c,sigma,half | const:v,a,b.
    #[arg(long = "f", conflicts_with = "family")]
    f: Option<String>,
    /// A member of the standard family instead of --f.
    #[arg(long)]
    family: Option<String>,
}

impl DatumArgs {
    fn datum(&self) -> Result<BoundaryFunction<f64>, LabError> {
        match (&self.f, &self.family) {
            (Some(spec), _) => spec.parse(),
            (None, Some(sel)) => {
                let names = resolve_family(sel)?;
                match names.as_slice() {
                    [one] => family_member(one),
                    _ => Err(LabError::InvalidInput(
                        "select exactly one family member".into(),
                    )),
                }
            }
            (None, None) => Err(LabError::InvalidInput(
                "boundary data required: pass --f or --family".into(),
            )),
        }
    }
}

#[derive(Args)]
struct ExtendArgs {
    #[command(flatten)]
    datum: DatumArgs,
    #[arg(long)]
    lambda: f64,
    /// a:b:n (uniform) or a:b:geometric[:ratio].
    #[arg(long)]
    tgrid: String,
    #[arg(long)]
    xgrid: String,
    /// Output file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Radial,
    Nontangential,
    HardyLittlewood,
}

#[derive(Args)]
struct MaximalArgs {
    #[command(flatten)]
    datum: DatumArgs,
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "nontangential")]
    operator: Operator,
    /// Lattice nodes per unit length.
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// moser | caccioppoli | sobolev | l2moser | iteration | polar | domination | normequiv | oracle
    suite: String,
    /// Start from the config of an earlier report (or a bare config file).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// `all`, or member names or their leading word, comma separated.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    balls: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Report files written by `verify`.
    reports: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Lab(LabError),
    Assertion(Vec<String>),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> LabError {
    LabError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), LabError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn extend(a: &ExtendArgs) -> Result<(), LabError> {
    let f = a.datum.datum()?;
    let ts = a.tgrid.parse::<NodeSpec>()?.nodes()?;
    let xs = a.xgrid.parse::<NodeSpec>()?.nodes()?;
    let ext = PoissonExtender::new(LambdaParam::new(a.lambda)?, ExtensionOptions::default())?;
    let grid = ext.extend(&f, &ts, &xs)?;
    if a.out.extension().is_some_and(|e| e == "json") {
        write(&a.out, &grid.to_json())
    } else {
        let mut buf = Vec::new();
        grid.write_csv(&mut buf)?;
        write(&a.out, &String::from_utf8_lossy(&buf))
    }
}

fn maximal(a: &MaximalArgs) -> Result<(), LabError> {
    let f = a.datum.datum()?;
    if a.resolution == 0 {
        return Err(LabError::InvalidInput("resolution must be positive".into()));
    }
    let h = 1.0 / a.resolution as f64;
    let profile = match a.operator {
        Operator::HardyLittlewood => {
            let lattice = maximal_lattice(&f, h)?;
            let radii = TSweep {
                t_min: 0.5 * h,
                t_max: 2.0 * lattice.x_nodes.last().copied().unwrap_or(1.0),
                ratio: SWEEP_RATIO,
            };
            hardy_littlewood_max(
                &f,
                &lattice.x_nodes,
                radii,
                a.lambda,
                IntervalFamily::Uncentered,
            )?
        }
        op => {
            let ext =
                PoissonExtender::new(LambdaParam::new(a.lambda)?, ExtensionOptions::default())?;
            let data = MaximalData::compute(&ext, &f, h)?;
            let mut p = if matches!(op, Operator::Radial) {
                data.radial
            } else {
                data.nontangential
            };
            for v in &mut p.values {
                *v *= data.scale;
            }
            p
        }
    };
    write(&a.out, &profile.to_csv())
}

fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let suite: Suite = a.suite.parse()?;
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(LabError::from)?;
            let inner = value.get("config").cloned().unwrap_or(value);
            let cfg: SuiteConfig = serde_json::from_value(inner).map_err(LabError::from)?;
            if cfg.suite != suite {
                return Err(LabError::InvalidInput(format!(
                    "config is for suite {}, not {suite}",
                    cfg.suite
                ))
                .into());
            }
            cfg
        }
        None => SuiteConfig::defaults(suite),
    };
    if let Some(l) = &a.lambda {
        cfg.lambdas = l.clone();
    }
    if let Some(p) = &a.p {
        cfg.p = p.clone();
    }
    if let Some(q) = &a.q {
        cfg.q = q.clone();
    }
    if let Some(sel) = &a.family {
        cfg.family = resolve_family(sel)?;
    }
    if let Some(r) = a.resolution {
        cfg.resolution = r;
    }
    if a.tau.is_some() {
        cfg.tau = a.tau;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(b) = a.balls {
        cfg.balls = b;
    }
    let report = run_suite(&cfg)?;
    let json_path = a.out.join(format!("{suite}.json"));
    let csv_path = a.out.join(format!("{suite}.csv"));
    write(&json_path, &report.to_json()?)?;
    write(&csv_path, &summary_csv(&report))?;
    for g in &report.groups {
        println!(
            "{:<48} max ratio {:>12.5e}  drift {:>9.3e}  {}",
            g.key,
            g.levels.last().copied().unwrap_or(f64::NAN),
            g.drift,
            if g.passed { "ok" } else { "FAIL" }
        );
    }
    println!(
        "{suite}: {} reports, {}",
        report.reports.len(),
        if report.passed { "passed" } else { "FAILED" }
    );
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Assertion(report.failures()))
    }
}

fn plotdata(a: &PlotArgs) -> Result<(), LabError> {
    for path in &a.reports {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let rows = plot_rows(&value)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("report");
        let out = a.out.join(format!("{stem}_plot.csv"));
        write(&out, &rows)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Extend(a) => extend(a).map_err(Failure::from),
        Command::Maximal(a) => maximal(a).map_err(Failure::from),
        Command::Verify(a) => verify(a),
        Command::Plotdata(a) => plotdata(a).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
        Err(Failure::Assertion(lines)) => {
            for l in lines {
                eprintln!("assertion failed: {l}");
            }
            ExitCode::from(1)
        }
    }
}
