use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).to_string_lossy().into_owned()
}

fn fwv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwv")).args(args).env_remove("FWV_THREADS").output().expect("binary runs")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn json_err(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schemas").join(format!("{name}.schema.json"))).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, v: &Value) {
    let s = schema(schema_name);
    let errors: Vec<String> = s.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}\n{v}");
}

#[test]
fn weighted_volume_of_the_projective_line() {
    let o = fwv(&["wvol", "--input", &fixture("p1.json"), "--xi", "1.0"]);
    assert!(o.status.success());
    let v = json_out(&o);
    assert!((v["value"].as_f64().unwrap() - 2.0 * 1f64.sinh()).abs() < 1e-11);
    assert_valid("wvol_result", &v);
}

#[test]
fn blowup_minimizer() {
    let o = fwv(&["minimize", "--input", &fixture("blowup_c2.json")]);
    assert!(o.status.success());
    let v = json_out(&o);
    for x in v["xi_star"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    }
    let w = (1.0 + 2f64.sqrt()) * 2f64.sqrt().exp() / 2.0;
    assert!((v["w_star"].as_f64().unwrap() - w).abs() < 1e-9);
    assert_eq!(v["status"], "converged");
    assert_valid("minimize_report", &v);
}

#[test]
fn dh_measure_as_csv() {
    let o = fwv(&["dhm", "--input", &fixture("p1.json"), "--xi", "1", "--m", "2", "--format", "csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(text.lines().next(), Some("location,mass"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(",0.5")));
}

#[test]
fn svg_histogram_has_one_bar_per_atom() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dh.svg");
    let o = fwv(&["dhm", "-i", &fixture("p2.json"), "--xi", "1,0.5", "--m", "3", "--svg", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json_out(&o);
    assert_valid("dhm_result", &v);
    let svg = std::fs::read_to_string(path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<rect").count(), v["atoms"].as_array().unwrap().len());
}

#[test]
fn check_passes_on_shipped_fixture() {
    let o = fwv(&["check", "--input", &fixture("p1.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_out(&o);
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["gradient-vs-fd", "hessian-pd", "three-way-agreement", "translation-identity", "dimension-estimate"] {
        assert!(names.contains(&n), "{names:?}");
    }
    assert_valid("check_report", &v);
}

#[test]
fn check_exit_codes() {
    let o = fwv(&["check", "--input", &fixture("table_negative_dim.json")]);
    assert_eq!(o.status.code(), Some(2));
    let e = json_err(&o);
    assert_eq!(e["error"], "invalid-input");
    assert_valid("error", &e);

    let o = fwv(&["check", "--input", &fixture("outside_xi.json")]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json_err(&o)["error"], "divergent");

    // the top level carries far more weight than the lower levels predict
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spike.json");
    std::fs::write(
        &path,
        r#"{"rank": 1, "source": "user", "levels": {"1": [{"alpha": [0], "dim": 1}], "2": [{"alpha": [0], "dim": 1000}]}}"#,
    )
    .unwrap();
    let o = fwv(&["check", "--input", path.to_str().unwrap(), "--xi", "1"]);
    assert_eq!(o.status.code(), Some(5));
    let e = json_err(&o);
    assert_eq!(e["error"], "check-failed");
    assert_eq!(e["detail"]["first_failure"], "dimension-estimate");
    assert_eq!(json_out(&o)["passed"], false);
}

#[test]
fn non_convergence_and_validation_codes() {
    let o = fwv(&["minimize", "-i", &fixture("blowup_c2.json"), "--start", "0.5,3", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(4));
    let e = json_err(&o);
    assert_eq!(e["error"], "not-converged");
    assert_eq!(e["detail"]["status"], "max-iterations");

    let o = fwv(&["okounkov", "-i", &fixture("semigroup_index2.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_err(&o)["error"], "conditions");

    let o = fwv(&["wvol", "-i", &fixture("p1.json"), "--xi", "inf"]);
    assert_eq!(o.status.code(), Some(2));

    let o = fwv(&["grad", "-i", &fixture("blowup_c2.json"), "--xi", "1,-1"]);
    assert_eq!(o.status.code(), Some(3));

    let o = fwv(&["wvol", "-i", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json_err(&o)["error"], "io");
}

#[test]
fn every_result_matches_its_schema() {
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("grad_result", vec!["grad".into(), "-i".into(), fixture("p2.json"), "--xi".into(), "0.3,-0.2".into()]),
        ("hess_result", vec!["hess".into(), "-i".into(), fixture("c2.json"), "--xi".into(), "1,1".into()]),
        ("futaki_result", vec!["futaki".into(), "-i".into(), fixture("blowup_c2.json"), "--xi".into(), "2,2".into(), "--eta".into(), "1,1".into()]),
        (
            "futaki_result",
            vec![
                "futaki".into(),
                "-i".into(),
                fixture("blowup_c2.json"),
                "--xi".into(),
                "1,1".into(),
                "--eta".into(),
                "1,0".into(),
                "--central-fiber".into(),
                fixture("c2.json"),
            ],
        ),
        ("stability_verdict", vec!["stability".into(), "-i".into(), fixture("p1.json"), "--xi".into(), "0".into()]),
        ("germ_result", vec!["nvol".into(), "-i".into(), fixture("germ_a1.json"), "--xi".into(), "1,1".into()]),
        ("germ_result", vec!["wgerm".into(), "-i".into(), fixture("germ_index3.json"), "--lattice".into(), "--m".into(), "50".into()]),
        ("compare_result", vec!["compare".into(), "-i".into(), fixture("p2.json"), "--germ".into(), fixture("germ_c2.json")]),
        ("okounkov_result", vec!["okounkov".into(), "-i".into(), fixture("semigroup_triangle.json"), "--m".into(), "30".into()]),
        ("wvol_result", vec!["wvol".into(), "-i".into(), fixture("blowup_c2.json"), "--xi".into(), "1,1".into(), "--method".into(), "lattice".into(), "--m".into(), "50".into()]),
        ("wvol_result", vec!["wvol".into(), "-i".into(), fixture("table_p1.json"), "--xi".into(), "0.5".into(), "--method".into(), "lattice".into(), "--m".into(), "2".into()]),
        ("dhm_result", vec!["dhm".into(), "-i".into(), fixture("p1xp1.json"), "--xi".into(), "1,0".into(), "--eta".into(), "0,1".into(), "--m".into(), "2".into()]),
        ("dhm_result", vec!["dhm".into(), "-i".into(), fixture("c2.json"), "--xi".into(), "1,1".into(), "--m".into(), "3".into(), "--truncation".into(), "2".into()]),
    ];
    for (name, args) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = fwv(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_valid(name, &json_out(&o));
    }
}

#[test]
fn shipped_inputs_match_their_schemas() {
    for entry in std::fs::read_dir(root().join("fixtures")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let kind = if name.starts_with("germ") {
            "germ"
        } else if name.starts_with("semigroup") {
            "semigroup"
        } else if name.starts_with("table") {
            "weight_table"
        } else {
            "fibration"
        };
        let ok = schema(kind).is_valid(&v);
        assert_eq!(ok, name != "table_negative_dim.json", "{name}");
    }
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["wvol", "-i", &fixture("blowup_c2.json"), "--xi", "1,1.2", "--method", "monte-carlo", "--samples", "300000", "--seed", "5"];
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_fwv")).args(args).env("FWV_THREADS", threads).output().unwrap();
        assert!(o.status.success());
        o.stdout
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("4"));

    let o = Command::new(env!("CARGO_BIN_EXE_fwv")).args(args).env("FWV_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn floats_carry_twelve_significant_digits() {
    let o = fwv(&["wvol", "-i", &fixture("c2.json"), "--xi", "1,1"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"value\": 7.38905609893"), "{text}");
}

#[test]
fn help_lists_commands_and_flags() {
    let o = fwv(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for c in ["wvol", "grad", "hess", "minimize", "futaki", "stability", "dhm", "nvol", "wgerm", "compare", "okounkov", "check"] {
        assert!(text.contains(c), "{c}");
    }
    assert!(text.contains("FWV_THREADS"));
    let o = fwv(&["minimize", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--tol", "--max-iter", "--start"] {
        assert!(text.contains(flag), "{flag}");
    }
    let o = fwv(&["wvol", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--m", "--seed", "--samples", "--truncation"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn closed_stdout_is_not_a_crash() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_fwv"))
        .args(["okounkov", "-i", &fixture("semigroup_triangle.json"), "--m", "60"])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty());
}
