use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wlsreg::WeightParams;
use wlsreg_cli::parse_dataset;

fn wlsreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlsreg")).args(args).output().expect("run wlsreg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn beta(o: &Output) -> Vec<f64> {
    stdout(o)
        .lines()
        .filter(|l| l.starts_with("beta["))
        .map(|l| l.split(": ").nth(1).unwrap().parse().unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SEVEN: &str = "x,y\n0,4\n0.5,4\n1,1\n2,2\n3,3\n4,4\n5,5\n";

#[test]
fn two_point_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "two.csv", "x,y\n0,0\n1,1\n");
    let o = wlsreg(&["fit", &csv, "--estimator", "ls"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let b = beta(&o);
    assert!(b[0].abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12, "{b:?}");
}

#[test]
fn seven_point_wls_resists_outliers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "seven.csv", SEVEN);
    let wls = wlsreg(&["fit", &csv, "--estimator", "wls", "--c", "0.1"]);
    let ls = wlsreg(&["fit", &csv, "--estimator", "ls"]);
    assert_eq!(wls.status.code(), Some(0));
    assert!((beta(&wls)[1] - 1.0).abs() < 0.15);
    assert!((beta(&ls)[1] - 1.0).abs() > 0.3);
}

#[test]
fn housing_sized_input_completes() {
    // 506 rows, 13 carriers and a response, like the Boston housing table
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    let mut body = String::from("crim,zn,indus,chas,nox,rm,age,dis,rad,tax,ptratio,b,lstat,medv\n");
    for _ in 0..506 {
        let x: Vec<f64> = (0..13).map(|j| rng.random_range(0.0..10.0) * (j + 1) as f64).collect();
        let y = 22.0 + x.iter().enumerate().map(|(j, v)| v * 0.1 / (j + 1) as f64).sum::<f64>() + rng.random_range(-3.0..3.0);
        let row: Vec<String> = x.iter().chain([y].iter()).map(|v| v.to_string()).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "housing.csv", &body);
    let o = wlsreg(&["fit", &csv, "--estimator", "wls", "--lts-starts", "100"]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&o.stderr));
    let b = beta(&o);
    assert_eq!(b.len(), 14);
    assert!(b.iter().all(|v| v.is_finite()));
}

#[test]
fn malformed_row_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "bad.csv", "x,y\n0,0\n1,oops\n2,2\n");
    let o = wlsreg(&["fit", &csv]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn collinear_design_cites_rank_screen() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "col.csv", "a,b,y\n1,2,1\n2,4,2\n3,6,2\n4,8,5\n5,10,4\n");
    let o = wlsreg(&["fit", &csv, "--estimator", "wls"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rank screen"));
}

#[test]
fn non_convergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "seven.csv", SEVEN);
    let o = wlsreg(&["fit", &csv, "--c", "0.1", "--init", "ls", "--wls-starts", "1", "--max-cycles", "1", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("converged: false"));
}

#[test]
fn residuals_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "seven.csv", SEVEN);
    let out = dir.path().join("r.csv");
    let o = wlsreg(&["fit", &csv, "--estimator", "ls", "--residuals", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("residual\n"));
    let r = parse_dataset(text.as_bytes()).unwrap();
    assert_eq!(r.n(), 7);

    let b = beta(&o);
    let d = parse_dataset(SEVEN.as_bytes()).unwrap();
    for i in 0..7 {
        let want = d.y()[i] - b[0] - b[1] * d.design()[(i, 1)];
        assert!((r.y()[i] - want).abs() < 1e-12);
    }
}

#[test]
fn simulate_writes_one_row_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = wlsreg(&[
        "simulate", "--n", "30", "--p", "3", "--eps", "0.2", "--reps", "5", "--seed", "3", "--lts-starts", "50", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,n,epsilon,estimator,emse,tt_seconds,re");
    assert_eq!(lines.len(), 4);
    assert!(stdout(&o).contains("procedure"));
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--n", "50", "--p", "5", "--eps", "0", "--reps", "10", "--seed", "1", "--no-timing", "--lts-starts", "50"];
    let a = wlsreg(&args);
    let b = wlsreg(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_rejects_bad_spec() {
    let o = wlsreg(&["simulate", "--n", "5", "--p", "5", "--reps", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wlsreg(&["simulate", "--eps", "0.6", "--reps", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wlsreg(&["simulate", "--scheme", "fixed", "--beta0", "1,2", "--p", "5", "--reps", "2", "--point", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fixed_scheme_runs() {
    let o = wlsreg(&[
        "simulate", "--scheme", "fixed", "--beta0", "1,1,-1", "--n", "40", "--eps", "0.1", "--reps", "3", "--estimators",
        "ls,wls", "--lts-starts", "30", "--no-timing",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
}

fn dump(args: &[&str]) -> Vec<Vec<f64>> {
    let o = wlsreg(&[&["weights-dump"], args].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,w,w1,w2,psi"));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn weights_dump_unit_region() {
    let rows = dump(&["--min", "-100", "--max", "100", "--count", "201"]);
    assert_eq!(rows.len(), 201);
    for r in rows {
        assert_eq!(r[1], 1.0);
        assert_eq!(r[2], 0.0);
    }
}

#[test]
fn weights_dump_tail_and_monotone_psi() {
    let (k, c, cstar): (f64, f64, f64) = (5.0, 100.0, 2.0);
    let max = 1e4 * (c * cstar).sqrt();
    let rows = dump(&["--cstar", "2", "--min", "1", "--max", &max.to_string(), "--count", "2000", "--log"]);
    let params = WeightParams::new(k, c).unwrap();
    let last = rows.last().unwrap();
    let limit = 2.0 * c * k * cstar / (k.exp() - 1.0);
    assert!((last[4] - limit).abs() / limit < 0.01);
    let tail: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] * r[0] / cstar > 5.0 * c).collect();
    assert!(tail.len() > 100);
    assert!(tail.windows(2).all(|w| w[1][4] < w[0][4]));
    for r in &rows {
        assert_eq!(r[1], params.weight(r[0]));
    }
}

#[test]
fn weights_dump_rejects_bad_grid() {
    assert_eq!(wlsreg(&["weights-dump", "--min", "5", "--max", "1"]).status.code(), Some(1));
    assert_eq!(wlsreg(&["weights-dump", "--count", "1"]).status.code(), Some(1));
}

#[test]
fn breakdown_and_equivariance_commands() {
    let o = wlsreg(&["breakdown", "--lts-starts", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("replaced: 22"));
    assert!(text.contains("rbp_theoretical: 23/50"));

    let o = wlsreg(&["equivariance", "--estimator", "ls", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0));
    for key in ["regression", "scale", "affine"] {
        let line = stdout(&o).lines().find(|l| l.starts_with(key)).unwrap().to_string();
        let v: f64 = line.split(": ").nth(1).unwrap().parse().unwrap();
        assert!(v < 1e-8, "{line}");
    }
}
