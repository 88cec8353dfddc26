use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use statdist::report::parse_report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_statdist"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("statdist-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const BELL_PAIR: &str = "dims 2 2\n1 0\n0 0\n0 0\n0 0\n\ndims 2 2\n0.70710678118654752 0\n0 0\n0 0\n0.70710678118654752 0\n";

#[test]
fn locc_on_product_versus_bell() {
    let path = scratch("bell.txt");
    fs::write(&path, BELL_PAIR).unwrap();
    let out = run(&["locc", "--states", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let r = parse_report(&text).unwrap();
    let quarter = std::f64::consts::FRAC_PI_4;
    assert!((r.get("d_global").unwrap() - quarter).abs() <= 1e-9);
    assert!((r.get("d_locc").unwrap() - quarter).abs() <= 1e-9);
    let leaves = r.get_table("leaves").unwrap();
    assert_eq!(leaves.header, ["outcome", "amp_re", "amp_im", "p1", "p2"]);
    assert_eq!(leaves.rows.len(), 4);
    assert_eq!(leaves.rows[2][0], "1-0");
    for row in &leaves.rows {
        let re: f64 = row[1].parse().unwrap();
        assert!((re - 1.0 / (4.0 * 2f64.sqrt())).abs() <= 1e-9);
    }
    assert_eq!(r.render(), text, "report round trip is exact");
}

#[test]
fn order_flag_and_determinism() {
    let args = ["locc", "--dims", "2 3 2", "--order", "2 0 1", "--seed", "17"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = parse_report(&stdout(&a)).unwrap();
    assert!(r.config.contains(&("order".to_string(), "2 0 1".to_string())));
    assert_eq!(r.get_table("leaves").unwrap().rows.len(), 12);
}

#[test]
fn pure_report_has_no_table() {
    let out = run(&["pure", "--dims", "3", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(!text.contains("[table"));
    assert!(parse_report(&text).unwrap().get("d_global_deg").is_some());
}

#[test]
fn mismatched_layouts_exit_two() {
    let path = scratch("mismatch.txt");
    fs::write(&path, "dims 2\n1 0\n0 0\n\ndims 3\n1 0\n0 0\n0 0\n").unwrap();
    let out = run(&["pure", "--states", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn parse_error_names_line() {
    let path = scratch("extra.txt");
    fs::write(&path, "dims 2\n1 0\n0 0\n0 0\n").unwrap();
    let out = run(&["pure", "--states", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn out_flag_writes_file_and_bad_path_fails() {
    let path = scratch("report.txt");
    let out = run(&["equidiag", "--dim", "4", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r = parse_report(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r.get_table("basis").unwrap().rows.len(), 16);

    let bad = run(&["pure", "--dims", "2", "--out", "/nonexistent-dir/x/report.txt"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn equidiag_matrix_file() {
    let path = scratch("m.txt");
    fs::write(&path, "dim 2\n0 0\n1 0\n0 0\n0 0\n").unwrap();
    let out = run(&["equidiag", "--matrix", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = parse_report(&stdout(&out)).unwrap();
    assert!(r.get("residual").unwrap() <= 1e-10);
}

#[test]
fn mixed_from_files() {
    let r1 = scratch("rho1.txt");
    let r2 = scratch("rho2.txt");
    fs::write(&r1, "dim 2\n0.75 0\n0.25 0.1\n0.25 -0.1\n0.25 0\n").unwrap();
    fs::write(&r2, "dim 2\n0.5 0\n0 0\n0 0\n0.5 0\n").unwrap();
    let out = run(&["mixed", "--rho1", r1.to_str().unwrap(), "--rho2", r2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = parse_report(&stdout(&out)).unwrap();
    assert!(r.get("d_equidiag").unwrap() <= r.get("d_bures").unwrap() + 1e-9);

    let bad = scratch("bad_rho.txt");
    fs::write(&bad, "dim 2\n1.5 0\n0 0\n0 0\n-0.5 0\n").unwrap();
    let out = run(&["mixed", "--rho1", bad.to_str().unwrap(), "--rho2", r2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_on_seeded_pair() {
    let out = run(&["oracle", "--dim", "3", "--trials", "200", "--restarts", "4", "--steps", "300", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = parse_report(&stdout(&out)).unwrap();
    assert!(r.get("sampled_bound_max_violation").unwrap() <= 1e-12);
    assert!(r.get("d_search").unwrap() <= r.get("d_global").unwrap() + 1e-12);
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let checks: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert!(checks.len() >= 20);
    assert!(checks.iter().all(|l| l.starts_with("PASS ")));
}

#[test]
fn unknown_subcommand_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["locc", "--seed", "x"]).status.code(), Some(2));
}
