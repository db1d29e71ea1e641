//! End-to-end runs of the `kbound` binary: exit codes, reports and written files.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbound")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sample(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut a = vec!["potential", "sample"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["--out", p(&out)]);
    let o = kbound(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

// β₋₁ = β₀ = i/4 with α₀ = −2Aβ₋₁ − 2Bβ₀ for (A, B) = (1, 2): normalized, exactly rational
const DELAUNAY: &str = r#"{"degree": 1, "A": 1.0, "B": 2.0, "alpha": [[0.0, -1.5]], "beta": [[0.0, 0.25], [0.0, 0.25]]}"#;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let f = dir.join(name);
    std::fs::write(&f, body).unwrap();
    f
}

const VACUUM: &str = r#"{"degree": 1, "A": 1.0, "B": -1.0, "alpha": [[0.0, 0.0]], "beta": [[0.0, 0.25], [0.0, 0.25]]}"#;

#[test]
fn default_suite_passes() {
    let o = kbound(&["--json", "suite", "run"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json_of(&o);
    let tests = r["tests"].as_array().unwrap();
    assert!(tests.len() >= 30);
    assert_eq!(r["failed"], 0);
    assert!(tests.iter().all(|t| t["statement"].as_str().is_some_and(|s| !s.is_empty())));
    let mut ids: Vec<_> = tests.iter().map(|t| t["id"].as_str().unwrap()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), tests.len());
}

#[test]
fn zero_tolerances_fail_every_float_test() {
    let dir = TempDir::new().unwrap();
    let t: serde_json::Map<String, Value> =
        serde_json::from_str::<serde_json::Map<String, Value>>(include_str!("../../../tolerances.json")).unwrap().into_iter().map(|(k, _)| (k, Value::from(0.0))).collect();
    let f = dir.path().join("zero.json");
    std::fs::write(&f, serde_json::to_string(&t).unwrap()).unwrap();
    let o = kbound(&["--json", "--tol-file", p(&f), "suite", "run"]);
    assert_eq!(code(&o), 1);
    let r = json_of(&o);
    for test in r["tests"].as_array().unwrap() {
        if test["kind"] == "float" {
            assert_eq!(test["pass"], false, "{}", test["id"]);
        } else {
            assert_eq!(test["pass"], true, "{}", test["id"]);
        }
    }
}

#[test]
fn suite_report_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(code(&kbound(&["--seed", "11", "suite", "run", "--report", p(&a)])), 0);
    assert_eq!(code(&kbound(&["--seed", "11", "suite", "run", "--report", p(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let r: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(r["seed"], 11);
    assert!(r["environment"]["version"].is_string());
}

#[test]
fn bad_tolerance_files_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [("broken.json", "{"), ("unknown.json", r#"{"no.such": 1}"#), ("negative.json", r#"{"frame.unitarity": -1}"#)] {
        let f = dir.path().join(name);
        std::fs::write(&f, body).unwrap();
        let o = kbound(&["--tol-file", p(&f), "suite", "run"]);
        assert_eq!(code(&o), 2, "{name}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(code(&kbound(&["--tol-file", "/nonexistent/tol.json", "suite", "run"])), 2);
}

#[test]
fn vacuum_surface_writes_mesh_metric_and_report() {
    let dir = TempDir::new().unwrap();
    let xi = dir.path().join("vacuum.json");
    std::fs::write(&xi, VACUUM).unwrap();
    let (obj, csv, rep) = (dir.path().join("s.obj"), dir.path().join("omega.csv"), dir.path().join("r.json"));
    let o = kbound(&["surface", "generate", p(&xi), "--out", p(&obj), "--omega", p(&csv), "--report", p(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let mesh = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(mesh.lines().filter(|l| l.starts_with("v ")).count(), 64 * 64);
    assert_eq!(mesh.lines().filter(|l| l.starts_with("f ")).count(), 63 * 63);
    let mut rd = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["x", "y", "omega"]);
    let omegas: Vec<f64> = rd.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(omegas.len(), 64 * 64);
    assert!(omegas.iter().all(|w| w.abs() < 1e-6));
    let r: Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    assert_eq!(r["rescaled"], false);
}

#[test]
fn missing_input_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let (obj, rep) = (dir.path().join("s.obj"), dir.path().join("r.json"));
    let o = kbound(&["surface", "generate", p(&dir.path().join("absent.json")), "--out", p(&obj), "--report", p(&rep)]);
    assert_eq!(code(&o), 2);
    assert!(!obj.exists() && !rep.exists());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"degree": 1}"#).unwrap();
    assert_eq!(code(&kbound(&["surface", "generate", p(&bad), "--out", p(&obj)])), 2);
    assert!(!obj.exists());
}

#[test]
fn argument_errors_exit_two() {
    assert_eq!(code(&kbound(&["kmat", "inspect", "--A", "1"])), 2);
    assert_eq!(code(&kbound(&["sweep", "run", "--degrees", "0..3"])), 2);
    assert_eq!(code(&kbound(&["sweep", "run", "--degrees", "x"])), 2);
}

fn sweep_rows(args: &[&str]) -> Vec<csv::StringRecord> {
    let mut a = vec!["sweep", "run"];
    a.extend_from_slice(args);
    let o = kbound(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    csv::Reader::from_reader(o.stdout.as_slice()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn sweep_reproduces_dimension_count() {
    let rows = sweep_rows(&["--degrees", "1..8"]);
    let dims: Vec<&str> = rows.iter().map(|r| &r[4]).collect();
    assert_eq!(dims, ["2", "2", "5", "5", "8", "8", "11", "11"]);
    assert!(rows.iter().all(|r| r[3] == r[4] && &r[5] == "true"));
}

#[test]
fn offdiag_sweep_has_genus_one() {
    let rows = sweep_rows(&["--degrees", "1..10", "--offdiag"]);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| &r[9] == "1"), "{rows:?}");
}

#[test]
fn empty_sweep_is_header_only() {
    let o = kbound(&["sweep", "run", "--degrees", ""]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "d,A,B,nullity,dimension,dimension_ok,degenerate,re_freedom,im_freedom,genus,ksym_residual,error");
}

#[test]
fn degenerate_k_rows_are_flagged_not_gated() {
    let rows = sweep_rows(&["--degrees", "2", "--A", "1", "--B", "-1"]);
    assert_eq!(&rows[0][6], "true");
}

#[test]
fn delaunay_verify_reports_boundary_residuals() {
    let dir = TempDir::new().unwrap();
    let xi = write(dir.path(), "d.json", DELAUNAY);
    let rep = dir.path().join("r.json");
    let o = kbound(&["surface", "verify", p(&xi), "--grid", "32x32", "--A", "1", "--B", "2", "--report", p(&rep)]);
    assert!(matches!(code(&o), 0 | 1));
    let r: Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    for key in ["sinh_gordon", "ksym", "boundary_y0", "phi_sym", "frame_sym", "b_sym", "zeta_sym", "family_sym", "diff_kf", "f_identity", "f_identity_reflected", "checks"] {
        assert!(!r[key].is_null(), "missing {key}");
    }
    for key in ["phi_sym", "frame_sym", "b_sym", "zeta_sym"] {
        assert!(r[key].as_f64().unwrap() < 1e-7, "{key} = {}", r[key]);
    }
    assert!(r["ksym"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["rescaled"], false);
    // second-order stencil at h = 1/16
    assert!(r["boundary_y0"].as_f64().unwrap() < 1e-2);
}

#[test]
fn verify_detects_wrong_boundary_constants() {
    let dir = TempDir::new().unwrap();
    let xi = write(dir.path(), "d.json", DELAUNAY);
    let o = kbound(&["--json", "surface", "verify", p(&xi), "--grid", "16x16", "--A", "0.3", "--B", "-0.7"]);
    assert_eq!(code(&o), 1);
    let r = json_of(&o);
    assert!(r["ksym"].as_f64().unwrap() > 1e-3);
    assert!(r["frame_sym"].as_f64().unwrap() > 1e-3);
}

#[test]
fn potential_files_verify_and_tampering_fails() {
    let dir = TempDir::new().unwrap();
    let f = sample(dir.path(), "p.json", &["--degree", "3", "--A", "0.375", "--B", "0.75"]);
    assert_eq!(code(&kbound(&["potential", "verify", p(&f)])), 0);
    let mut v: Value = serde_json::from_slice(&std::fs::read(&f).unwrap()).unwrap();
    v["B"] = Value::from(0.5);
    std::fs::write(&f, v.to_string()).unwrap();
    assert_eq!(code(&kbound(&["potential", "verify", p(&f)])), 1);
}

#[test]
fn sample_reproducible_per_seed() {
    let a = kbound(&["--seed", "5", "potential", "sample", "--degree", "2", "--A", "1", "--B", "2"]);
    let b = kbound(&["--seed", "5", "potential", "sample", "--degree", "2", "--A", "1", "--B", "2"]);
    let c = kbound(&["--seed", "6", "potential", "sample", "--degree", "2", "--A", "1", "--B", "2"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn offdiag_file_has_genus_one() {
    let dir = TempDir::new().unwrap();
    let f = sample(dir.path(), "o.json", &["--degree", "4", "--A", "0.375", "--B", "0.75", "--offdiag"]);
    let o = kbound(&["--json", "spectral", "genus", p(&f)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_of(&o)["genus"], 1);
}

#[test]
fn exact_and_float_genus_agree_on_rational_files() {
    let dir = TempDir::new().unwrap();
    for (body, genus) in [(DELAUNAY, 1), (VACUUM, 0)] {
        let f = write(dir.path(), "x.json", body);
        for mode in [&[][..], &["--exact"][..]] {
            let mut a = vec!["--json", "spectral", "genus", p(&f)];
            a.extend_from_slice(mode);
            let o = kbound(&a);
            assert_eq!(code(&o), 0);
            assert_eq!(json_of(&o)["genus"], genus, "{body} {mode:?}");
        }
    }
}

#[test]
fn potential_dim_matches_prediction() {
    let o = kbound(&["--json", "potential", "dim", "--degree", "5", "--A", "0.375", "--B", "0.75"]);
    assert_eq!(code(&o), 0);
    let r = json_of(&o);
    assert_eq!(r["nullity"], 8);
    assert_eq!(r["theorem_dimension"], 8);
}

#[test]
fn kmat_inspect_json() {
    let o = kbound(&["--json", "kmat", "inspect", "--A", "1", "--B", "2", "--lambda", "0.5,0.5"]);
    assert_eq!(code(&o), 0);
    let r = json_of(&o);
    assert_eq!(r["K(1)"][0][0][0], -4.0);
    assert_eq!(r["K(-1)"][1][1][0], 12.0);
    assert_eq!(r["roots"]["degenerate"], false);
    assert_eq!(r["residues"].as_array().unwrap().len(), 4);
    assert!(r["at"]["det"].is_array());
}

#[test]
fn twoboundary_matched_constants() {
    let dir = TempDir::new().unwrap();
    let xi = write(dir.path(), "d.json", DELAUNAY);
    let o = kbound(&["--json", "twoboundary", "analyze", p(&xi), "--grid", "16x16", "--y1", "0.5", "--B1", "0.5"]);
    let r = json_of(&o);
    assert_eq!(code(&o), 0, "{r}");
    assert_eq!(r["matched"], true);
    assert!(r["det_residual"].as_f64().unwrap() < 1e-8);
}
