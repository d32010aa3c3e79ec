use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bessel-lab"))
        .args(args)
        .env_remove("BESSEL_LAB_JOBS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn extend_writes_a_csv_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "u.csv");
    let o = lab(&[
        "extend",
        "--f",
        "indicator:1,2",
        "--lambda",
        "1",
        "--tgrid",
        "0.1:1:4",
        "--xgrid",
        "0.5:2.5:5",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() > 4);
    let json = path(dir.path(), "u.json");
    let o = lab(&[
        "extend", "--family", "tent", "--lambda", "0.3", "--tgrid", "0.1:1:3", "--xgrid", "1:3:3",
        "--out", &json,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "u.csv");
    let bad_family = lab(&[
        "extend",
        "--family",
        "nope",
        "--lambda",
        "1",
        "--tgrid",
        "0.1:1:4",
        "--xgrid",
        "0.5:2.5:5",
        "--out",
        &out,
    ]);
    assert_eq!(code(&bad_family), 2, "{}", stderr(&bad_family));
    let bad_lambda = lab(&[
        "extend",
        "--f",
        "indicator:1,2",
        "--lambda",
        "-1",
        "--tgrid",
        "0.1:1:4",
        "--xgrid",
        "0.5:2.5:5",
        "--out",
        &out,
    ]);
    assert_eq!(code(&bad_lambda), 2);
    let bad_suite = lab(&["verify", "nosuch", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&bad_suite), 2);
    assert!(stderr(&bad_suite).starts_with("error:"));
}

#[test]
fn inadmissible_tau_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&[
        "verify",
        "iteration",
        "--lambda",
        "1",
        "--p",
        "1",
        "--tau",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("series diverges"), "{}", stderr(&o));
}

#[test]
fn verify_writes_reports_and_plotdata_flattens_them() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = lab(&["verify", "sobolev", "--lambda", "0.3,1", "--out", d]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sobolev.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["config"]["lambdas"], serde_json::json!([0.3, 1.0]));
    assert!(
        fs::read_to_string(dir.path().join("sobolev.csv"))
            .unwrap()
            .lines()
            .count()
            > 1
    );

    let o = lab(&[
        "verify",
        "moser",
        "--lambda",
        "1",
        "--p",
        "1",
        "--family",
        "tent",
        "--resolution",
        "16",
        "--balls",
        "4",
        "--out",
        d,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let plots = path(dir.path(), "plots");
    let o = lab(&["plotdata", &path(dir.path(), "moser.json"), "--out", &plots]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = fs::read_to_string(dir.path().join("plots/moser_plot.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    assert!(rows.starts_with("lambda,p,R,x0,ratio"));

    // rerunning from the echoed config reproduces the report
    let again = path(dir.path(), "again");
    let o = lab(&[
        "verify",
        "moser",
        "--config",
        &path(dir.path(), "moser.json"),
        "--out",
        &again,
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.path().join("moser.json")).unwrap(),
        fs::read(dir.path().join("again/moser.json")).unwrap()
    );
}

#[test]
fn plotdata_with_no_reports_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["plotdata", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn jobs_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_bessel-lab"))
            .args(["verify", "iteration", "--lambda", "0.3", "--out", d])
            .env("BESSEL_LAB_JOBS", jobs)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("0")), 2);
    let o = run("1");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = fs::read(dir.path().join("iteration.json")).unwrap();
    assert_eq!(code(&run("3")), 0);
    assert_eq!(first, fs::read(dir.path().join("iteration.json")).unwrap());
}

#[test]
fn maximal_profile_is_written() {
    let dir = tempfile::tempdir().unwrap();
    for op in ["radial", "nontangential", "hardy-littlewood"] {
        let out = path(dir.path(), &format!("{op}.csv"));
        let o = lab(&[
            "maximal",
            "--f",
            "indicator:1,2",
            "--lambda",
            "1",
            "--operator",
            op,
            "--resolution",
            "8",
            "--out",
            &out,
        ]);
        assert_eq!(code(&o), 0, "{op}: {}", stderr(&o));
        assert!(fs::read_to_string(&out).unwrap().lines().count() > 8);
    }
}
