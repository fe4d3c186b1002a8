//! End-to-end checks of the command-line interface: exit codes, file
//! output, config-file handling, and determinism of the emitted CSV.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qslr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qslr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qslr_cli_test_{}_{name}", std::process::id()));
    p
}

#[test]
fn invalid_k_exits_with_parameter_error() {
    let out = qslr(&["recover", "--k", "0", "--n", "50", "--d", "20", "--theta", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let out = qslr(&["qtest", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage") || stderr.contains("--bogus"));
}

#[test]
fn unknown_method_exits_one() {
    let out = qslr(&[
        "bench-recovery",
        "--n", "40", "--d", "20", "--k", "3", "--trials", "1",
        "--method", "nonsense",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_writes_a_parseable_deterministic_matrix() {
    let path = tmp("gen.csv");
    let args = [
        "gen", "--n", "12", "--d", "6", "--k", "2", "--theta", "2.0",
        "--seed", "5", "--out", path.to_str().unwrap(),
    ];
    let out = qslr(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read_to_string(&path).unwrap();
    assert_eq!(first.lines().count(), 12);
    assert_eq!(first.lines().next().unwrap().split(',').count(), 6);
    // Same seed, same bytes.
    let out = qslr(&args);
    assert_eq!(out.status.code(), Some(0));
    let second = std::fs::read_to_string(&path).unwrap();
    assert_eq!(first, second);
    std::fs::remove_file(&path).ok();
}

#[test]
fn qtest_prints_a_decision() {
    let out = qslr(&[
        "qtest", "--n", "400", "--d", "30", "--k", "3", "--theta", "4.0", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("decision: 1"), "stdout: {stdout}");
    assert!(stdout.contains("threshold:"));
}

#[test]
fn bench_testing_writes_csv_with_expected_schema() {
    let path = tmp("bench.csv");
    let out = qslr(&[
        "bench-testing",
        "--n", "60", "--d", "30", "--k", "4", "--theta", "3",
        "--trials", "3", "--seed", "9", "--method", "dt,qslr",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("method,k,theta,trial,metric,value"));
    // 2 methods x 3 trials x 2 statistics + 2 summaries.
    assert_eq!(csv.lines().count(), 1 + 12 + 2);
    assert!(csv.contains("statistic_h0"));
    assert!(csv.contains("statistic_h1"));
    assert!(csv.contains("summary,best_cutoff_error"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let config_path = tmp("preset.conf");
    std::fs::write(
        &config_path,
        "# tiny preset\nn = 50\nd = 25\nk = 3\ntheta = 3.0\ntrials = 2\nmethod = dt\nseed = 4\n",
    )
    .unwrap();
    let out = qslr(&[
        "bench-recovery",
        "--config", config_path.to_str().unwrap(),
        "--trials", "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    // trials flag overrides the file: trials 0..2 all present.
    assert!(stdout.contains("dt,3,3,2,overlap_fraction"));
    assert!(stdout.contains("summary,overlap_fraction_mean"));
    std::fs::remove_file(&config_path).ok();
}

#[test]
fn config_file_with_unknown_key_exits_one() {
    let config_path = tmp("bad.conf");
    std::fs::write(&config_path, "bogus = 1\n").unwrap();
    let out = qslr(&["bench-recovery", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_file(&config_path).ok();
}

#[test]
fn verify_reports_all_checks_and_exits_zero() {
    let out = qslr(&["verify", "--seed", "0"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for check in [
        "analytic_oracles",
        "sherman_morrison",
        "chi_squared_null",
        "lasso_kkt",
        "l0_dominance",
        "omp_orthogonal_recovery",
        "csv_determinism",
    ] {
        assert!(
            stdout.contains(&format!("PASS {check}")),
            "missing PASS line for {check}: {stdout}"
        );
    }
}

#[test]
fn help_exits_zero() {
    let out = qslr(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for sub in ["gen", "qtest", "recover", "bench-recovery", "bench-testing", "verify"] {
        assert!(stdout.contains(sub), "help missing {sub}");
    }
}
