use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polysinc::colloc::deterministic_solve;
use polysinc::model::Expr;
use polysinc::sinc::SincGrid;

const EXAMPLE1: &str = include_str!("../../core/configs/example1.toml");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polysinc")).args(args).output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    run(&all)
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// Values of a grid file, skipping the two header lines.
fn grid_values(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn example1_summary_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.toml");
    let o = run_in(tmp.path(), &["solve", "--config", cfg.to_str().unwrap(), "--lattice", "41"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(tmp.path());
    assert_eq!(s["basis_count"], 4);
    assert_eq!(s["unknowns"], 484);
    assert!(s["errors"]["mean"]["l2"].as_f64().unwrap() < 5e-4);
    for name in ["mean.csv", "variance.csv", "coeff_0.csv", "coeff_3.csv", "decay.csv", "timings.json"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
    assert!(!tmp.path().join("coeff_4.csv").exists());
    let decay = fs::read_to_string(tmp.path().join("decay.csv")).unwrap();
    assert_eq!(decay.lines().next(), Some("i,max_abs"));
    assert_eq!(decay.lines().count(), 5);
}

#[test]
fn example2_validates_with_56_functions() {
    let cfg = configs().join("example2.toml");
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("56 basis functions"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &EXAMPLE1.replace("N = 5", "N = 5\nnewton = true"));
    let out = tmp.path().join("out");
    let o = run_in(&out, &["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists(), "nothing is written before validation");
    assert_eq!(run(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn non_coercive_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &EXAMPLE1.replace("b0 = 1.0", "b0 = 2.5"));
    assert_eq!(run(&["validate", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn solver_failure_is_a_numeric_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = EXAMPLE1.replace("tau = 1000.0", "tau = 1000.0\nmethod = \"iterative\"\nmax_iter = 1");
    let cfg = write_config(tmp.path(), &text);
    let o = run_in(&tmp.path().join("out"), &["solve", "--config", cfg.to_str().unwrap(), "--lattice", "11"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn outputs_are_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run_in(dir, &["solve", "--config", cfg.to_str().unwrap(), "--lattice", "51"]);
        assert!(o.status.success());
        let o = run_in(dir, &["compare", "--config", cfg.to_str().unwrap(), "--n-sweep", "5,7", "--lattice", "51"]);
        assert!(o.status.success());
    }
    for name in ["mean.csv", "variance.csv", "coeff_2.csv", "decay.csv", "summary.json", "sweep.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn degree_zero_matches_deterministic_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &EXAMPLE1.replace("P = 3", "P = 0"));
    let out = tmp.path().join("out");
    let o = run_in(&out, &["solve", "--config", cfg.to_str().unwrap(), "--lattice", "21"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out)["basis_count"], 1);
    assert!(grid_values(&out.join("variance.csv")).iter().flatten().all(|&v| v == 0.0));

    let g = SincGrid::with_default_step(-1.0, 1.0, 5).unwrap();
    // div(2 grad u) = 1 with zero boundary values
    let u = deterministic_solve(&Expr::constant(2.0), &|_: f64, _: f64| 1.0, &|_: f64, _: f64| 0.0, &g, &g, 1e3).unwrap();
    let mean = grid_values(&out.join("mean.csv"));
    for (i, row) in mean.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let (x, y) = (-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64);
            let want = u.eval(&[x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0)]).unwrap();
            assert!((v - want).abs() < 1e-10, "({x}, {y}): {v} vs {want}");
        }
    }
}

#[test]
fn compare_against_itself_gives_equal_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.toml");
    let o = run_in(
        tmp.path(),
        &["compare", "--config", cfg.to_str().unwrap(), "--competitor", "polysinc", "--n-sweep", "5,9", "--lattice", "41"],
    );
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,l2_mean_polysinc,l2_mean_fd,l2_var_polysinc,l2_var_fd"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[1], r[2]);
        assert_eq!(r[3], r[4]);
    }
    let e: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(e[1] < e[0]);
}

#[test]
fn fd_competitor_is_worse() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.toml");
    let o = run_in(tmp.path(), &["compare", "--config", cfg.to_str().unwrap(), "--n-sweep", "11", "--lattice", "41"]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 11.0);
    assert!(row[2] > 10.0 * row[1]);
}

#[test]
fn bad_sweep_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1.toml");
    let o = run_in(tmp.path(), &["compare", "--config", cfg.to_str().unwrap(), "--n-sweep", "6"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_in(tmp.path(), &["compare", "--config", cfg.to_str().unwrap(), "--reference", "exact"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lebesgue_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["lebesgue"]);
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("lebesgue.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,estimate,measured"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.first().unwrap()[0], 3.0);
    assert_eq!(rows.len(), 6);
    let r11 = rows.iter().find(|r| r[0] == 11.0).unwrap();
    assert!((r11[1] - 1.867).abs() < 1e-3);
    assert!(rows.iter().all(|r| r[2] >= 1.0));
    assert_eq!(run_in(tmp.path(), &["lebesgue", "--n-sweep", "4"]).status.code(), Some(2));
}
