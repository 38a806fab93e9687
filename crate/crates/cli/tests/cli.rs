use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdiv_core::channels::random_cptp;
use qdiv_core::recovery::e_fixed_pair;
use qdiv_core::states::random_density;
use qdiv_core::{ComplexDense, ConditionalExpectation, DensityMatrix};

fn qdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdiv"))
        .args(args)
        .output()
        .expect("qdiv runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn divergence_of_identical_states_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let rho = random_density(3, 3, 5).unwrap();
    let a = write(dir.path(), "a.json", &rho.to_json());
    let b = write(dir.path(), "b.json", &rho.to_json());
    let o = qdiv(&["divergence", s(&a), s(&b), "--json"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["relative_entropy", "bs_entropy", "standard", "maximal"] {
        assert!(v[key].as_f64().unwrap().abs() < 1e-12, "{key}: {v}");
    }
}

#[test]
fn divergence_of_diagonal_pair_is_classical() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = ([0.7, 0.3], [0.4, 0.6]);
    let a = DensityMatrix::new(ComplexDense::from_real_diag(&p)).unwrap();
    let b = DensityMatrix::new(ComplexDense::from_real_diag(&q)).unwrap();
    let fa = write(dir.path(), "a.json", &a.to_json());
    let fb = write(dir.path(), "b.json", &b.to_json());
    let o = qdiv(&["divergence", s(&fa), s(&fb), "--family", "negpower:0.5", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let classical: f64 = p.iter().zip(&q).map(|(x, y)| -y * (x / y).powf(0.5)).sum();
    let kl: f64 = p.iter().zip(&q).map(|(x, y)| x * (x / y).ln()).sum();
    assert!((v["standard"].as_f64().unwrap() - classical).abs() < 1e-12);
    assert!((v["maximal"].as_f64().unwrap() - classical).abs() < 1e-12);
    assert!((v["relative_entropy"].as_f64().unwrap() - kl).abs() < 1e-12);
    assert!((v["bs_entropy"].as_f64().unwrap() - kl).abs() < 1e-12);
}

#[test]
fn malformed_state_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &DensityMatrix::maximally_mixed(2).to_json());
    let bad = write(dir.path(), "bad.json", "{\n  \"dim\": 2,\n  \"entries\": [[1, 0], \n}");
    let o = qdiv(&["divergence", s(&good), s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.json:4:"), "{err}");
}

#[test]
fn bounds_equal_fixture_has_zero_slack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"trials": 1, "fixture": "equal"}"#);
    let csv = dir.path().join("out.csv");
    let o = qdiv(&["bounds", "--config", s(&cfg), "--out", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["min_slack"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(summary["violations"].as_array().unwrap().len(), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("seed,d,family,gap,rhs_k,rhs_l,precondition_ok,slack"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn bounds_csv_is_byte_identical_across_runs() {
    let args = [
        "bounds", "--seed", "99", "--trials", "8", "--dims", "2,3", "--family", "bs,negpower:0.25",
        "--channel", "random_cptp",
    ];
    let a = qdiv(&args);
    let b = qdiv(&args);
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 16);
}

#[test]
fn bounds_rejects_bad_config() {
    let o = qdiv(&["bounds", "--dims", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("dims"));
    let o = qdiv(&["bounds", "--channel", "teleport"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_tol_flag_can_force_violations() {
    // An absurdly negative tolerance turns every passing row into a violation.
    let o = qdiv(&["bounds", "--trials", "2", "--tol=-10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn certify_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let e = ConditionalExpectation::partial_trace_factor(2, 2).unwrap();
    let (a, b) = e_fixed_pair(&e, 11).unwrap();
    let fa = write(dir.path(), "a.json", &a.to_json());
    let fb = write(dir.path(), "b.json", &b.to_json());
    let fe = write(dir.path(), "e.json", &e.as_kraus().to_json());
    let o = qdiv(&["certify", s(&fa), s(&fb), s(&fe)]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "EQUALITY"), "{out}");
    assert!(out.contains("\"inputs\""));

    let r1 = random_density(4, 4, 1).unwrap();
    let r2 = random_density(4, 4, 2).unwrap();
    let t = random_cptp(4, 2, 2, 3).unwrap();
    let f1 = write(dir.path(), "r1.json", &r1.to_json());
    let f2 = write(dir.path(), "r2.json", &r2.to_json());
    let ft = write(dir.path(), "t.json", &t.to_json());
    let report = dir.path().join("report.json");
    let o = qdiv(&["certify", s(&f1), s(&f2), s(&ft), "--out", s(&report)]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "NO-EQUALITY"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["gap_bs"].as_f64().unwrap() > 0.0);
    assert_eq!(v["verdict"], "NO-EQUALITY");
}

#[test]
fn certify_rejects_mismatched_supports_and_dims() {
    let dir = tempfile::tempdir().unwrap();
    let p = DensityMatrix::new(ComplexDense::from_real_diag(&[1.0, 0.0])).unwrap();
    let q = DensityMatrix::maximally_mixed(2);
    let fp = write(dir.path(), "p.json", &p.to_json());
    let fq = write(dir.path(), "q.json", &q.to_json());
    let id = write(dir.path(), "id.json", &qdiv_core::KrausChannel::identity(2).to_json());
    let o = qdiv(&["certify", s(&fp), s(&fq), s(&id)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("support mismatch"));

    let id3 = write(dir.path(), "id3.json", &qdiv_core::KrausChannel::identity(3).to_json());
    let o = qdiv(&["certify", s(&fq), s(&fq), s(&id3)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("dimension mismatch"));
}

#[test]
fn selftest_passes() {
    let o = qdiv(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("selftest PASS"));
}
