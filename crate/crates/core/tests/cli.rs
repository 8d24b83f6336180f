use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nuhcert"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn certify_default_homothety() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["certify", "--fixed-clock"]);
    let rep = report(&out);
    assert_eq!(rep["schema"], "nuh-report/1");
    assert_eq!(rep["closed_form"]["provenance"], "closed-form");
    let verdict = rep["closed_form"]["certificate"]["verdict"]
        .as_str()
        .unwrap();
    let want = if verdict == "certified" { 0 } else { 1 };
    assert_eq!(out.status.code(), Some(want), "{}", stderr(&out));
    assert_eq!(rep["summary"]["exit_code"], want);
}

#[test]
fn certify_small_homothety_gives_reason() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[map]\nmatrix = 3, 0, 0, 3\n");
    let out = run(dir.path(), &["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("k < 5: coefficient non-positive"));
    let rep = report(&out);
    assert_eq!(rep["summary"]["exit_code"], 1);
}

#[test]
fn certify_excluded_divisor_pair() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[map]\nmatrix = 1, 0, 0, 2\n");
    let out = run(dir.path(), &["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("(τ₁,τ₂)=(1,2) excluded, d ≤ 4"));
}

#[test]
fn singular_matrix_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[map]\nmatrix = 1, 2, 2, 4\n");
    let out = run(dir.path(), &["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[shear]\nt = fast\n");
    let out = run(dir.path(), &["certify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("shear.t"), "{}", stderr(&out));
}

#[test]
fn verify_certified_config_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[shear]\nt = 300\nr = 300\n");
    let out = run(
        dir.path(),
        &[
            "verify",
            "--config",
            &cfg,
            "--grid",
            "8x8x8",
            "--fixed-clock",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rep = report(&out);
    assert_eq!(rep["empirical"]["provenance"], "empirical");
    assert!(
        rep["empirical"]["grid_min_j"]["min_average"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

#[test]
fn verify_broken_profile_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "e.conf",
        "[profile]\nkind = coefficients\nconstant = 0\nharmonics = 1:1:0\n",
    );
    let out = run(dir.path(), &["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_without_shear_lacks_evidence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[shear]\nt = 0\nr = 0\n");
    let out = run(
        dir.path(),
        &[
            "verify",
            "--config",
            &cfg,
            "--grid",
            "4x4x6",
            "--fixed-clock",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let rep = report(&out);
    assert_eq!(rep["empirical"]["invariants"]["violation_count"], 0);
}

#[test]
fn census_over_budget_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["census", "--depth", "6"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scan_writes_table_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("scan.json");
    let out = run(
        dir.path(),
        &["scan", "--out", out_path.to_str().unwrap(), "--fixed-clock"],
    );
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,r,verdict,limitJiLowerBound"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    // once certified, larger t = r stay certified
    let first = rows.iter().position(|r| r[2] == "certified");
    if let Some(i) = first {
        assert!(rows[i..].iter().all(|r| r[2] == "certified"));
    }
}

#[test]
fn scan_small_grid_preconditions_unmet() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[shear]\nt_grid = 0.1, 0.2, 0.3\n");
    let out_path = dir.path().join("scan.json");
    run(
        dir.path(),
        &[
            "scan",
            "--config",
            &cfg,
            "--out",
            out_path.to_str().unwrap(),
        ],
    );
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let verdicts: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(verdicts.len(), 3);
    assert!(
        verdicts.iter().all(|v| *v == "preconditions-unmet"),
        "{verdicts:?}"
    );
}

#[test]
fn fixed_clock_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["census", "--seed", "11", "--depth", "2", "--fixed-clock"];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(report(&a)["generated_at"], 0);
}

#[test]
fn normalize_general_matrix() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "e.conf", "[map]\nmatrix = 2, 0, 0, 4\n");
    let out = run(dir.path(), &["normalize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rep = report(&out);
    assert_eq!(rep["divisors"]["tau1"], 2);
    assert_eq!(rep["divisors"]["tau2"], 4);
    assert_eq!(rep["eigenvalue_plus_minus_one"], false);
}

#[test]
fn unknown_verb_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(2));
}
