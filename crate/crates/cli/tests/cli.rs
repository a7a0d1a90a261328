//! End-to-end tests of the `sp4` binary: subcommand output, exit codes,
//! config handling, determinism, and the output-directory override.

use std::process::{Command, Output};

fn sp4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sp4"))
        .args(args)
        .env_remove("SP4_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn moduli_census_text() {
    let out = sp4(&["moduli", "--genus", "2"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("maximal_components: 48"), "{s}");
    assert!(s.contains("smooth_components: 17"));
    assert!(s.contains("hitchin_components: 16"));
}

#[test]
fn moduli_requires_genus() {
    let out = sp4(&["moduli"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_error_exits_one() {
    let out = sp4(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sp4(&["solve", "--n", "7"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sp4(&["solve", "--mu", "0", "--nu", "1", "--n", "8"]);
    assert_eq!(out.status.code(), Some(1), "unstable data is a usage error");
}

#[test]
fn non_convergence_exits_two() {
    let out = sp4(&[
        "solve", "--mu", "1", "--nu", "0.5", "--n", "8", "--full", "--seed", "1",
        "--max-iter", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_solve_reports_split_metric() {
    let out = sp4(&["solve", "--mu", "1", "--nu", "0", "--n", "8", "--full", "--seed", "4"]);
    assert!(out.status.success());
    let s = stdout(&out);
    let offdiag: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("offdiag_sup: "))
        .expect("offdiag line")
        .parse()
        .expect("float");
    assert!(offdiag < 1e-8, "{s}");
    assert!(s.contains("converged: true"));
}

#[test]
fn hopf_zero_q2_is_minimal() {
    let out = sp4(&["hopf", "--mu", "1", "--nu", "0.3"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("minimal_immersion: true"));
    let out = sp4(&["hopf", "--mu", "1", "--q2", "0.25"]);
    assert!(stdout(&out).contains("hopf: 1.0000000000000000e0,0.0000000000000000e0"));
}

#[test]
fn algebra_check_passes() {
    let out = sp4(&["algebra", "check", "--format", "csv"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.starts_with("check,passed,detail"));
    assert!(!s.contains(",false,"), "{s}");
}

#[test]
fn csv_output_is_deterministic() {
    let args =
        ["solve", "--mu", "1", "--nu", "0.3", "--n", "8", "--seed", "11", "--format", "csv"];
    let a = sp4(&args);
    let b = sp4(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "byte-identical CSV for identical invocation");
}

#[test]
fn config_file_defaults_and_strictness() {
    let dir = std::env::temp_dir().join("sp4-cli-test-cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.cfg");
    std::fs::write(&good, "[solve]\nn = 8\nmu = 1\nnu = 0.3\nformat = csv\n").unwrap();
    let out = sp4(&["solve", "--config", good.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("mu,nu,q2,"), "config format=csv applied");
    // CLI flag overrides config.
    let out = sp4(&["solve", "--config", good.to_str().unwrap(), "--format", "text"]);
    assert!(stdout(&out).starts_with("mu: "));

    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "n = 8\nwibble = 3\n").unwrap();
    let out = sp4(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn out_dir_env_override() {
    let dir = std::env::temp_dir().join("sp4-cli-test-out");
    let _ = std::fs::remove_dir_all(&dir);
    let out = Command::new(env!("CARGO_BIN_EXE_sp4"))
        .args(["moduli", "--genus", "2", "--format", "csv"])
        .env("SP4_OUT_DIR", &dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let body = std::fs::read_to_string(dir.join("moduli.csv")).expect("artifact written");
    assert!(body.contains("48"));
}

#[test]
fn rigidity_dimensions() {
    let out = sp4(&["rigidity", "--phi1", "1", "--phi2", "0.4,0.2", "--phi-mu", "0.9"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("dimension: 0"));
    let out = sp4(&["rigidity", "--phi1", "1", "--phi2", "0", "--phi-mu", "0.8"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("hypothesis_met: false"));
    let dim: usize = s
        .lines()
        .find_map(|l| l.strip_prefix("dimension: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dim > 0);
}

#[test]
fn holonomy_and_energy_report() {
    let out = sp4(&["energy", "--mu", "1", "--nu", "0", "--n", "8"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("energy: 3.0000000000000000e0"));
    let out = sp4(&["holonomy", "--mu", "1", "--nu", "0.3", "--n", "8"]);
    assert!(out.status.success());
    let s = stdout(&out);
    let sym: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("symplectic_defect: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(sym < 1e-8, "{s}");
}
