//! End-to-end runs of the `utm` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use utm_cli::config::parse_config;
use utm_cli::emit::read_solution_csv;
use utm_core::oracle::FourierSeries;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn utm(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_utm"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("UTM_THREADS", n),
        None => cmd.env_remove("UTM_THREADS"),
    };
    cmd.output().unwrap()
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

/// Exit code and the parsed error object from stderr.
fn failure(out: &Output) -> (i32, Value) {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code().unwrap(), v["error"].clone())
}

const FIXTURE_GRID: &str = "11,3,0,1,0.05,0.5";

#[test]
fn solve_matches_fixture_byte_for_byte() {
    let out = utm(&["solve", "--config", &config("heat_dirichlet.conf"), "--grid", FIXTURE_GRID], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let want = std::fs::read(fixture("heat_dirichlet.csv")).unwrap();
    assert!(out.stdout == want, "solution CSV differs from the fixture");
    assert!(!out.stdout.contains(&b'\r'));
}

#[test]
fn fixture_agrees_with_series_oracle() {
    let cfg = parse_config(&configs().join("heat_dirichlet.conf")).unwrap();
    let s = cfg.setup().unwrap();
    let series = FourierSeries::new(&s.profile, &s.bc, s.data.q0.as_ref().unwrap(), 0.05).unwrap();
    let rows = read_solution_csv(&std::fs::read_to_string(fixture("heat_dirichlet.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 33);
    for (x, t, q) in rows {
        let want = series.eval(x, t);
        assert!((q - want).norm() <= 1e-12, "({x}, {t}): {q} vs {want}");
    }
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["solve", "--config", &config("cgl.conf"), "--grid", "5,2,0.1,0.9,0.1,0.3"];
    let (a, b) = (utm(&args, Some("1")), utm(&args, Some("4")));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let eig = ["eigs", "--config", &config("cgl.conf"), "--count", "3", "--nmax", "1"];
    let (a, b) = (utm(&eig, Some("1")), utm(&eig, None));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let first = &v.as_array().unwrap()[0];
    let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["kappa_im", "kappa_re", "lambda_im", "lambda_re", "m", "n_truncation", "residual"]);
    assert_eq!(first["n_truncation"], 1);
}

#[test]
fn empty_grid_gives_header_only() {
    let out = utm(&["solve", "--config", &config("heat_dirichlet.conf"), "--grid", "0,0,0,1,0.1,0.5"], None);
    assert!(out.status.success());
    assert_eq!(out.stdout, b"x,t,re_q,im_q\n");
}

#[test]
fn identities_pass_on_cgl() {
    let out = utm(&["identities", "--config", &config("cgl.conf"), "--seed", "11"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = v.as_array().unwrap();
    assert!(checks.len() >= 16);
    assert!(checks.iter().all(|c| c["passed"] == true));
    for kind in ["derivative", "composition", "eigen boundary", "factorial", "asymptotic"] {
        assert!(checks.iter().any(|c| c["name"].as_str().unwrap().starts_with(kind)), "{kind}");
    }
}

#[test]
fn out_directory_receives_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested");
    let out = utm(
        &[
            "compare",
            "--config",
            &config("heat_dirichlet.conf"),
            "--oracle",
            "fourier",
            "--grid",
            "5,2,0,1,0.1,0.2",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("compare.json")).unwrap()).unwrap();
    assert!(summary["max_abs_err"].as_f64().unwrap() < 1e-12);
    let table = std::fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    assert!(table.starts_with("x,t,re_q,im_q,re_ref,im_ref,abs_err\n"));
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn failures_are_json_with_nonzero_exit() {
    let (code, e) = failure(&utm(&["solve", "--config", "/nonexistent/x.conf", "--grid", FIXTURE_GRID], None));
    assert_eq!((code, e["kind"].as_str()), (1, Some("io")));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "domain { kind = interval xl = 0 xr = 1 }\ncoefficients { mode = preset preset = cgl }\nbc { rows = [[1, 0, -1, 0]] }\n").unwrap();
    let (code, e) = failure(&utm(&["validate", "--config", bad.to_str().unwrap()], None));
    assert_eq!(code, 1);
    assert_eq!(e["kind"], "config");
    assert_eq!(e["path"], "bc.rows[1]");
    assert_eq!((e["line"].as_u64(), e["column"].as_u64()), (Some(3), Some(13)));

    let (code, e) = failure(&utm(&["eigs", "--config", &config("whole_line_gaussian.conf")], None));
    assert_eq!((code, e["kind"].as_str()), (2, Some("usage")));
    let (code, e) = failure(&utm(&["compare", "--config", &config("cgl.conf")], None));
    assert_eq!((code, e["kind"].as_str()), (2, Some("usage")));
    let (code, e) = failure(&utm(&["solve"], None));
    assert_eq!((code, e["kind"].as_str()), (2, Some("usage")));
    let (code, e) = failure(&utm(&["frobnicate", "--config", &config("cgl.conf")], None));
    assert_eq!((code, e["kind"].as_str()), (2, Some("usage")));
    let (code, _) = failure(&utm(&["validate", "--config", &config("cgl.conf")], Some("zero")));
    assert_eq!(code, 2);
}

#[test]
fn numerical_errors_report_the_variant() {
    // t_min above the earliest output time is rejected by the solver.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    let text = std::fs::read_to_string(configs().join("heat_dirichlet.conf")).unwrap();
    std::fs::write(&cfg, format!("{text}\nnumerics {{ contour {{ t_min = 0.2 }} }}\n")).unwrap();
    let (code, e) = failure(&utm(&["solve", "--config", cfg.to_str().unwrap(), "--grid", FIXTURE_GRID], None));
    assert_eq!((code, e["kind"].as_str()), (1, Some("numerics")));
    assert!(e["variant"].is_string());
}

#[test]
fn validate_reports_case() {
    let out = utm(&["validate", "--config", &config("bump_robin.conf")], None);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["case"], "Case1");
    assert_eq!(v["regular"], true);
    assert!(v["assumptions"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}
