//! Golden output, exit codes and file handling of the `relbosons` binary.

use std::process::{Command, Output};

use relbosons::potentials::{DValue, PotentialSpec};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relbosons")).args(args).output().expect("spawn relbosons")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

#[test]
fn gamma_endpoints_golden() {
    let out = run(&["gamma", "--spin", "0", "--d", "0,inf"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["d", "gamma", "residual", "method"]);
    assert_eq!(rows[1][..2], ["0", "1.50000000"]);
    assert_eq!(rows[2][..2], ["inf", "2.11803399"]);
    assert!(rows[1..].iter().all(|r| r[3] == "shooting"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn spin1_endpoints_golden() {
    let text = stdout(&run(&["gamma", "--spin", "1", "--d", "0,inf"]));
    let levels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(levels, ["2.50000000", "2.11803399"]);
}

#[test]
fn potential_golden_rows() {
    let out = run(&["potential", "--spin", "1", "--d", "0", "--q", "1:1.1:0.1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "q,W\n1.00000000,3.00000000\n1.10000000,2.86289256\n");
}

#[test]
fn potential_sweep_has_d_column() {
    let text = stdout(&run(&["potential", "--spin", "0", "--d", "0,inf", "--q", "1:1:1"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,q,W");
    assert_eq!(lines.len(), 3);
    for (line, d) in lines[1..].iter().zip([DValue::Finite(0.0), DValue::Infinite]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "1.00000000");
        let w: f64 = cols[2].parse().unwrap();
        assert!((w - PotentialSpec::scalar(d).value_at(1.0)).abs() < 1e-8, "{line}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["gamma", "--spin", "0", "--d", "0,0.5,inf", "--n", "2000"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let args = ["rayleigh", "--case", "spin0", "--d", "1"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn json_gamma_carries_both_routes() {
    let out = run(&["gamma", "--spin", "0", "--d", "inf", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "shooting");
    let p = &v["points"][0];
    assert_eq!(p["d"], "inf");
    let g = p["gamma"].as_f64().unwrap();
    let fd = p["gamma_fd"].as_f64().unwrap();
    assert!((g - 2.118_033_988_749_895).abs() < 1e-6 && (fd - g).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["gamma", "--spin", "2"][..],
        &["gamma", "--channel", "transverse", "--spin", "0"],
        &["density", "--dr=0"],
        &["potential", "--q", "1:0:0.1"],
        &["frobnicate"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn density_reports_negative_shell() {
    let out = run(&["density", "--rmax", "1.5", "--dr", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("negative shells: 1"), "{err}");
    let text = stdout(&out);
    assert!(text.starts_with("r,rho,eps\n"));
    assert!(text.lines().skip(1).any(|l| l.split(',').nth(1).unwrap().starts_with('-')));
}

#[test]
fn out_file_is_written_whole_and_replaced() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("levels.csv");
    let p = path.to_str().unwrap();
    std::fs::write(&path, "stale contents that are longer than the result\n".repeat(100)).unwrap();
    let out = run(&["gamma", "--spin", "0", "--d", "0", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("d,gamma,residual,method\n0,1.50000000,"));
    assert_eq!(written.lines().count(), 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    let summary = text.lines().last().unwrap();
    let (passed, rest) = summary.split_once(" of ").unwrap();
    assert_eq!(passed, rest.split_whitespace().next().unwrap());
}
