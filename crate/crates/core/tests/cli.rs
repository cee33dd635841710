use std::path::Path;
use std::process::{Command, Output};

use rug::{Float, Rational};
use serde_json::Value;

fn absum(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absum"))
        .args(args)
        .env("ABSUM_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn rational(s: &str) -> Rational {
    s.parse().unwrap()
}

#[test]
fn empty_sum() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["eval", "--x", "1", "--N", "0", "--m", "4"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["value"], "1/1");
    let out = absum(&["eval", "--x", "7/3", "--N", "0", "--m", "4"], dir.path());
    assert_eq!(json(&out)["value"], "81/2401");
    assert_eq!(v["exact"], true);
}

#[test]
fn hand_checked_values() {
    let dir = tempfile::tempdir().unwrap();
    for (x, n, m, want) in [("1", "2", "2", "11/18"), ("1", "3", "1", "1/4"), ("1", "1", "1", "1/2"), ("2", "1", "1", "1/6")] {
        for method in ["auto", "direct", "hypergeometric", "bell"] {
            let out = absum(&["eval", "--x", x, "--N", n, "--m", m, "--method", method], dir.path());
            assert!(out.status.success(), "{method}");
            assert_eq!(json(&out)["value"], want, "x={x} N={n} m={m} {method}");
        }
    }
}

#[test]
fn pole_and_bad_arguments_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["eval", "--x", "-1", "--N", "3", "--m", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"], "pole");

    let out = absum(&["eval", "--x", "1", "--N", "3", "--m", "1", "--bits", "32"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = absum(&["eval", "--x", "1/0", "--N", "3", "--m", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["table", "--x", "1", "--N", "1..3", "--m", "1..2", "--format", "csv"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,N,m,value,method,exact,error_bound,error");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("1/1,1,1,1/2,"));
    assert!(lines[4].starts_with("1/1,2,2,11/18,"));
    assert!(lines[5].starts_with("1/1,3,1,1/4,"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["table", "--x", "3/2", "--N", "1..6", "--m", "1..3", "--method", "series-stirling2"];
    let a = absum(&args, dir.path());
    let b = absum(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn inexact_value_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["eval", "--x", "1/2", "--N", "5", "--m", "3", "--method", "quadrature-6"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["exact"], false);
    assert_eq!(v["bits"], 128);
    let exact = json(&absum(&["eval", "--x", "1/2", "--N", "5", "--m", "3"], dir.path()));
    let got = Float::with_val(256, Float::parse(v["value"].as_str().unwrap()).unwrap());
    let want = Float::with_val(256, rational(exact["value"].as_str().unwrap()));
    let bound: f64 = v["error_bound"].as_str().unwrap().parse().unwrap();
    let err = Float::with_val(256, &got - &want).abs().to_f64();
    assert!(err <= bound, "err {err} bound {bound}");
}

#[test]
fn validate_reports_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["validate", "--x", "3/2", "--N", "4", "--m", "3"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["entries"].as_array().unwrap().len() > 5);
}

#[test]
fn two_param_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["eval", "--two-param", "--x", "1", "--y", "2", "--m", "1", "--n", "1"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&out)["value"], "1/2");

    let out = absum(
        &["validate", "--two-param", "--x", "1/2", "--y", "3", "--m", "2", "--n", "2", "--bits", "96", "--tol", "1e-15"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn env_cache_overrides_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = absum(
        &["eval", "--x", "1", "--N", "4", "--m", "2", "--cache_path", flag_dir.path().to_str().unwrap()],
        env_dir.path(),
    );
    assert!(out.status.success());
    assert!(env_dir.path().join("stirling-second.json").exists());
    assert!(!flag_dir.path().join("stirling-second.json").exists());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("value.json");
    let out = absum(&["eval", "--x", "1", "--N", "2", "--m", "2", "--out", target.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["value"], "11/18");
}

#[test]
fn bench_loss_grows_with_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["bench", "--x", "1", "--N", "5,20,40", "--m", "3"], dir.path());
    assert!(out.status.success());
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let lost: Vec<f64> = rows.iter().map(|r| r["digits_lost"].as_f64().unwrap()).collect();
    assert!(rows.iter().all(|r| r["bits"] == 53 && r["bell_digits_lost"] == 0.0));
    assert!(lost.windows(2).all(|w| w[0] <= w[1]), "{lost:?}");
    assert!(lost[2] > 5.0);
}

#[test]
fn selftest_filter() {
    let dir = tempfile::tempdir().unwrap();
    let out = absum(&["selftest", "--filter", "stirling"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
