use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmtgap")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_value(o: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&o.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from output:\n{text}"))
        .parse()
        .unwrap()
}

/// Numeric rows of a CSV with `#` metadata and one header line.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, i: usize) -> Vec<f64> {
    rows(path).iter().map(|r| r[i].parse().unwrap()).collect()
}

fn local_extrema(v: &[f64]) -> usize {
    v.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count()
}

/// Unit-rate Poisson points written as a points file, by inverse transform
/// from a small LCG so the test has no extra dependencies.
fn poisson_points(path: &Path, n: usize) {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut x = 0.0;
    let mut text = String::from("# rho_bar = 1\n# first_height = 100\n# xi = 1\n# seed = none\n");
    for _ in 0..n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        x += -u.ln();
        text.push_str(&format!("{x}\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn solve_reports_small_residual_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "sigma0", "--xi", "1", "--smax", "20", "--out", "s0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout_value(&o, "residual_sup") < 1e-8);
    assert!(dir.path().join("s0.json").exists());
    let s = column(&dir.path().join("s0.csv"), 0);
    assert_eq!(s.len(), 401);
    assert_eq!(*s.last().unwrap(), 20.0);
}

#[test]
fn correction_solve_chains_its_base() {
    let dir = tempfile::tempdir().unwrap();
    let chained = run(dir.path(), &["solve", "sigma1", "--xi", "0.6", "--smax", "10", "--out", "a"]);
    assert_eq!(code(&chained), 0, "{}", String::from_utf8_lossy(&chained.stderr));
    assert_eq!(code(&run(dir.path(), &["solve", "sigma0", "--xi", "0.6", "--smax", "10", "--out", "b0"])), 0);
    let given = run(dir.path(), &["solve", "sigma1", "--xi", "0.6", "--smax", "10", "--base", "b0.json", "--out", "b"]);
    assert_eq!(code(&given), 0);
    assert_eq!(column(&dir.path().join("a.csv"), 1), column(&dir.path().join("b.csv"), 1));
}

#[test]
fn low_degree_modified_solve_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "u0", "--xi", "0.6", "--degree", "12", "--out", "u0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout_value(&o, "residual_sup") < 1e-8);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["solve", "sigma0", "--xi", "1.5", "--out", "x"])), 2);
    assert_eq!(code(&run(d, &["solve", "sigma9", "--out", "x"])), 2);
    assert_eq!(code(&run(d, &["det", "--kernel", "finite", "--s", "1"])), 2);
    assert_eq!(code(&run(d, &["extrapolate", "--count", "2", "--out", "e.csv"])), 2);
    assert_eq!(code(&run(d, &["--bogus"])), 2);
    // the continuation cannot pass the pole-like growth far out
    assert_eq!(code(&run(d, &["solve", "sigma0", "--smax", "200", "--out", "x"])), 4);
    assert_eq!(code(&run(d, &["zeros", "unfold", "--input", "missing.txt", "--out", "x"])), 3);
}

#[test]
fn spacing_paths_agree_and_start_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["spacing", "--xi", "1", "--path", "both", "--out", "sp.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout_value(&o, "max_discrepancy") < 1e-6);
    let r = rows(&dir.path().join("sp.csv"));
    assert_eq!(r[0][0].parse::<f64>().unwrap(), 0.0);
    assert!(r[0][1].parse::<f64>().unwrap().abs() < 1e-12);
    assert!(r[0][2].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn thinned_correction_oscillates_more() {
    let dir = tempfile::tempdir().unwrap();
    for xi in ["1", "0.6"] {
        let o = run(dir.path(), &["spacing", "--xi", xi, "--out", &format!("sp{xi}.csv")]);
        assert_eq!(code(&o), 0);
    }
    let full = column(&dir.path().join("sp1.csv"), 2);
    let thinned = column(&dir.path().join("sp0.6.csv"), 2);
    assert!(local_extrema(&thinned) > local_extrema(&full));
}

#[test]
fn extrapolation_matches_the_differential_equation() {
    let dir = tempfile::tempdir().unwrap();
    for xi in ["1", "0.6"] {
        let o = run(dir.path(), &["extrapolate", "--xi", xi, "--out", "e.csv"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout_value(&o, "max_c2_difference") < 1e-4);
        assert!(stdout_value(&o, "max_limit_difference") < 1e-6);
        let path = dir.path().join("e.csv");
        let (c2, pc) = (column(&path, 2), column(&path, 4));
        assert!(c2.iter().zip(&pc).all(|(a, b)| (a - b).abs() < 1e-4));
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("job.cfg"), "# job\nxi = 0.6\ns = 1.0\n").unwrap();
    let from_file = run(dir.path(), &["--config", "job.cfg", "det"]);
    let explicit = run(dir.path(), &["det", "--xi", "0.6", "--s", "1"]);
    assert_eq!(from_file.stdout, explicit.stdout);
    let overridden = run(dir.path(), &["--config", "job.cfg", "det", "--xi", "1"]);
    let unthinned = run(dir.path(), &["det", "--s", "1"]);
    assert_eq!(overridden.stdout, unthinned.stdout);
}

#[test]
fn thinning_is_reproducible_and_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    poisson_points(&d.join("p.txt"), 20_000);
    assert_eq!(code(&run(d, &["zeros", "thin", "--input", "p.txt", "--xi", "0.6", "--out", "t.txt"])), 2);
    for out in ["t1.txt", "t2.txt"] {
        let o = run(d, &["zeros", "thin", "--input", "p.txt", "--xi", "0.6", "--seed", "42", "--out", out]);
        assert_eq!(code(&o), 0);
    }
    let a = std::fs::read(d.join("t1.txt")).unwrap();
    assert_eq!(a, std::fs::read(d.join("t2.txt")).unwrap());
    let o = run(d, &["zeros", "thin", "--input", "p.txt", "--xi", "0.6", "--seed", "43", "--out", "t3.txt"]);
    assert_eq!(code(&o), 0);
    assert_ne!(a, std::fs::read(d.join("t3.txt")).unwrap());
}

#[test]
fn poisson_two_point_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    poisson_points(&d.join("p.txt"), 200_000);
    let o = run(d, &["zeros", "twopoint", "--input", "p.txt", "--out", "tp.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path: PathBuf = d.join("tp.csv");
    let (value, err) = (column(&path, 3), column(&path, 4));
    assert_eq!(value.len(), 200);
    let worst = value.iter().zip(&err).map(|(v, e)| (v - 1.0).abs() / e).fold(0.0, f64::max);
    assert!(worst < 5.0, "largest deviation {worst} standard errors");
}

#[test]
fn unfold_then_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // a rigid sequence at the local mean spacing of height 1e6
    let e0 = 1e6_f64;
    let rho = (e0 / (2.0 * std::f64::consts::PI * std::f64::consts::E)).ln() / (2.0 * std::f64::consts::PI);
    let text: String = (0..2000).map(|i| format!("{}\n", e0 + i as f64 / rho)).collect();
    std::fs::write(d.join("h.txt"), text).unwrap();
    assert_eq!(code(&run(d, &["zeros", "unfold", "--input", "h.txt", "--out", "u.txt"])), 0);
    let o = run(d, &["zeros", "nnspacing", "--input", "u.txt", "--out", "nn.csv"]);
    assert_eq!(code(&o), 0);
    let (lo, counts) = (column(&d.join("nn.csv"), 0), column(&d.join("nn.csv"), 2));
    // s = 1 is a bin edge, so rounding may put a gap on either side of it
    let near_one: f64 = lo.iter().zip(&counts).filter(|(l, _)| (**l - 0.99).abs() < 0.015).map(|(_, c)| c).sum();
    assert_eq!(near_one, 1999.0);

    let o = run(d, &["zeros", "compare", "--input", "nn.csv", "--out", "cmp.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("cmp.csv")).unwrap();
    for key in ["xi", "seed", "rho_bar", "alpha", "N_eff", "window", "bin_width"] {
        assert!(text.contains(&format!("# {key} = ")), "metadata {key} missing");
    }
    assert!(text.contains("bin_center,value,stderr,theory,residual"));
}

#[test]
fn bad_heights_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("h.txt"), "100.5\n101.25\n101.0\n").unwrap();
    let o = run(d, &["zeros", "unfold", "--input", "h.txt", "--out", "u.txt"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    std::fs::write(d.join("h.txt"), "100.5\n101,25\n").unwrap();
    let o = run(d, &["zeros", "unfold", "--input", "h.txt", "--out", "u.txt"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
