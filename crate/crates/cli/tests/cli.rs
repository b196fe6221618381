use std::path::Path;
use std::process::{Command, Output};

use qrf_core::json::{FrameJson, GroupSource, RepJson, ScenarioJson, SystemJson};
use qrf_core::operator::OperatorJson;
use qrf_core::{builtin_group, Operator, UnitaryRep};
use serde_json::{json, Value};

type Op = Operator<f64>;

fn qrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrf")).args(args).output().expect("run qrf")
}

fn qrf_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrf")).args(args).env("QRF_THREADS", threads).output().expect("run qrf")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec(v).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

fn operator(v: &Value) -> Op {
    serde_json::from_value::<OperatorJson>(v.clone()).unwrap().to_operator().unwrap()
}

fn op_value(a: &Op) -> Value {
    serde_json::to_value(OperatorJson::from(a)).unwrap()
}

#[test]
fn verify_s3_passes_every_suite() {
    let out = qrf(&["verify", "--group", "builtin:s3", "--suite", "all", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let records = report["records"].as_array().unwrap();
    assert!(records.len() >= 15);
    let names: Vec<&str> = records.iter().map(|r| r["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);
    for r in records {
        assert_eq!(r["pass"], true, "{r}");
        assert!(!r["anchor"].as_str().unwrap().is_empty());
        assert!(r["max_deviation"].as_f64().unwrap() <= 1e-9);
    }
    assert_eq!(report["summary"]["failed"], 0);
    assert_eq!(report["summary"]["skipped"], 0);
}

#[test]
fn verify_trivial_group() {
    let out = qrf(&["verify", "--group", "builtin:z1", "--suite", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_group_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &json!({"cayley": [[0, 1], [1, 1]]}));
    let out = qrf(&["verify", "--group", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cayley row 1 not a permutation"));
}

#[test]
fn invalid_flags_are_input_errors() {
    for args in [
        &["verify", "--group", "z3", "--suite", "nonsense"][..],
        &["verify", "--group", "z3", "--tol", "0"],
        &["verify", "--group", "z3", "--trials", "0"],
        &["verify", "--group", "no-such-group"],
        &["verify"],
    ] {
        assert_eq!(qrf(args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(qrf_env(&["verify", "--group", "z2"], "zero").status.code(), Some(2));
}

#[test]
fn failing_checks_exit_with_one() {
    let out = qrf(&["verify", "--group", "z3", "--suite", "frame-change", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["summary"]["failed"].as_u64().unwrap() > 0);
    for r in report["records"].as_array().unwrap() {
        let pass = r["pass"].as_bool().unwrap();
        let dev = r["max_deviation"].as_f64();
        assert_eq!(pass, dev.is_some_and(|d| d <= 1e-300), "{r}");
    }
}

#[test]
fn reports_are_byte_stable() {
    let args = ["verify", "--group", "d4", "--seed", "7", "--trials", "5", "--no-timing"];
    let a = qrf_env(&args, "1");
    let b = qrf_env(&args, "4");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = qrf(&["verify", "--group", "d4", "--seed", "8", "--trials", "5", "--no-timing"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn csv_report_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = qrf(&["verify", "--group", "z4", "--suite", "measurement,covariance", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,anchor,pass,max_deviation,trials,runtime_ms,detail"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.starts_with("covariance/") || r.starts_with("measurement/")));
}

#[test]
fn large_scenarios_are_skipped_not_failed() {
    let out = qrf(&["verify", "--group", "s4", "--suite", "frame-change", "--trials", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let skipped = report["skipped"].as_array().unwrap();
    assert!(skipped.iter().any(|s| s["name"] == "frame-change/inverse"));
    assert!(skipped.iter().all(|s| s["reason"].as_str().unwrap().contains("cap")));
}

#[test]
fn verify_accepts_a_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let frame = |rep| FrameJson { group: None, rep, dim: None, povm: None, coherent_seed: None };
    let sc = ScenarioJson {
        group: GroupSource::Name("z4".into()),
        frames: vec![frame(RepJson::LeftRegular), frame(RepJson::LeftRight), frame(RepJson::LeftRegular)],
        system: SystemJson { rep: RepJson::Standard, dim: Some(3) },
        seed: 11,
    };
    let path = write(dir.path(), "scenario.json", &serde_json::to_value(&sc).unwrap());
    let out = qrf(&["verify", "--scenario", &path, "--trials", "4"]);
    let report = stdout_json(&out);
    assert_eq!(report["seed"], 11);
    assert_eq!(report["summary"]["failed"], 0);
}

#[test]
fn yen_of_identity_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let req = json!({
        "frame": {"rep": "left_regular"},
        "system": {"rep": "standard", "dim": 2},
        "operator": op_value(&Op::identity(2)),
    });
    let input = write(dir.path(), "yen.json", &req);
    let v = stdout_json(&qrf(&["yen", "--group", "s3", "--input", &input]));
    assert!(operator(&v["result"]).max_abs_diff(&Op::identity(12)) < 1e-12);
    assert_eq!(v["context"]["rank"], 4);
    assert_eq!(v["frame"]["flags"]["ideal"], true);
}

#[test]
fn yen_without_group_fails() {
    let dir = tempfile::tempdir().unwrap();
    let req = json!({"frame": {"rep": "left_regular"}, "system": {"dim": 2}, "operator": op_value(&Op::identity(2))});
    let input = write(dir.path(), "yen.json", &req);
    let out = qrf(&["yen", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no group"));
}

#[test]
fn twirl_leaves_invariant_operators_unchanged() {
    let g = builtin_group("d4").unwrap();
    // right translations commute with the left-regular action
    let r = UnitaryRep::<f64>::left_right(&g);
    let a = Op::from_matrix(r.matrix(1).matrix() + r.matrix(1).adjoint().matrix()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let req = json!({"group": "d4", "rep": "left_regular", "operator": op_value(&a)});
    let input = write(dir.path(), "twirl.json", &req);
    let v = stdout_json(&qrf(&["twirl", "--input", &input]));
    assert!(operator(&v["result"]).max_abs_diff(&a) < 1e-12);
    assert!(v["input_invariance_deviation"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["context"]["rank"], 8);
}

#[test]
fn frame_change_reproduces_the_ket_transformation() {
    let g = builtin_group("s3").unwrap();
    let dir = tempfile::tempdir().unwrap();
    for h2 in 0..6 {
        for h3 in [0, 4] {
            let req = json!({
                "scenario": {
                    "group": "s3",
                    "frames": [{"rep": "left_right"}, {"rep": "left_right"}, {"rep": "left_right"}],
                    "system": {"rep": "trivial", "dim": 1},
                },
                "from": 1,
                "to": 2,
                "ket": [h2, h3, 0],
            });
            let input = write(dir.path(), "fc.json", &req);
            let v = stdout_json(&qrf(&["frame-change", "--input", &input]));
            let a = g.inverse_of(h2);
            let expected = json!([a, g.op(h3, a), 0]);
            assert_eq!(v["ket"], expected, "h2={h2} h3={h3}");
        }
    }
}

#[test]
fn frame_change_flags_override_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let req = json!({
        "scenario": {
            "group": "z3",
            "frames": [{"rep": "left_right"}, {"rep": "left_right"}],
            "system": {"dim": 2},
        },
        "from": 1,
        "to": 2,
        "ket": [1, 0],
    });
    let input = write(dir.path(), "fc.json", &req);
    let v = stdout_json(&qrf(&["frame-change", "--input", &input, "--from", "2", "--to", "1"]));
    assert_eq!((v["from"].as_u64(), v["to"].as_u64()), (Some(2), Some(1)));
    assert_eq!(v["ket"], json!([2, 0]));
    let out = qrf(&["frame-change", "--input", &input, "--to", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reconstruct_matches_the_product_form() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = qrf_core::random::rng(5);
    let rho: Op = qrf_core::random::state(&mut rng, 2);
    let omega: Op = qrf_core::random::state(&mut rng, 36);
    let req = json!({
        "group": "s3",
        "frame1": {"rep": "left_regular"},
        "frame2": {"rep": "left_right"},
        "system": {"dim": 2},
        "rho": op_value(&rho),
        "omega": op_value(&omega),
    });
    let input = write(dir.path(), "rec.json", &req);
    let v = stdout_json(&qrf(&["reconstruct", "--input", &input]));
    assert!(v["product_form_deviation"].as_f64().unwrap() < 1e-10);
    let out = operator(&v["result"]);
    assert!((out.trace().re - 1.0).abs() < 1e-12 && out.is_positive(1e-12));
}
