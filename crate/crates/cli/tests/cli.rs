use std::path::PathBuf;
use std::process::{Command, Output};

use jacspec::classifier::{ClassificationReport, Route};

fn spec(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jacspec")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_routes() {
    for (file, route) in [
        ("thm_a.json", "ThmA"),
        ("blended_n1.json", "ThmB"),
        ("thm_c.json", "ThmC"),
        ("km_example1.json", "ThmD-notsa"),
        ("km_n3_negative.json", "Thm8-notsa"),
    ] {
        let o = run(&["classify", "--spec", &spec(file)]);
        assert_eq!(o.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&o.stderr));
        let rep = ClassificationReport::from_json(&stdout(&o)).unwrap();
        assert_eq!(rep.route.as_str(), route, "{file}");
    }
}

#[test]
fn classify_report_roundtrips() {
    let o = run(&["classify", "--spec", &spec("thm_c.json")]);
    let text = stdout(&o);
    let rep = ClassificationReport::from_json(&text).unwrap();
    assert_eq!(rep.route, Route::ThmC);
    assert_eq!(rep.to_json().trim(), text.trim());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["lambda"][0]["lo"], "-inf");
    assert_eq!(v["lambda"][1]["hi"], "inf");
}

#[test]
fn classify_is_deterministic() {
    let a = stdout(&run(&["classify", "--spec", &spec("km_example1.json")]));
    let b = stdout(&run(&["classify", "--spec", &spec("km_example1.json")]));
    assert_eq!(a, b);
}

#[test]
fn explicit_spec_is_rejected_by_classify() {
    let o = run(&["classify", "--spec", &spec("free.json")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lambda_of_blended_fixture() {
    let o = run(&["lambda", "--spec", &spec("blended_n1.json")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "interval_lo,interval_hi\n-1,1\n");
}

#[test]
fn lambda_grid_samples_discriminant() {
    let o = run(&["lambda", "--spec", &spec("blended_n1.json"), "--grid", "5", "--range", "-2,2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "x,discr");
    assert_eq!(rows.len(), 6);
    // discr 𝒳_1(x) = 4x² − 4
    let mid: Vec<f64> = rows[3].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(mid[0], 0.0);
    assert!((mid[1] + 4.0).abs() < 1e-12);
}

#[test]
fn eigs_of_free_section() {
    let o = run(&["eigs", "--spec", &spec("free.json"), "--size", "10", "--tol", "1e-13"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue"));
    let vals: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 10);
    for (j, v) in vals.iter().enumerate() {
        let exact = 2.0 * ((10 - j) as f64 * std::f64::consts::PI / 11.0).cos();
        assert!((v - exact).abs() < 1e-11, "{j}: {v} vs {exact}");
    }
}

#[test]
fn eigs_range_restricts_and_indexes() {
    let o = run(&["eigs", "--spec", &spec("free.json"), "--size", "10", "--range", "0,3"]);
    let out = stdout(&o);
    let idx: Vec<usize> = out.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(idx, vec![5, 6, 7, 8, 9]);
}

#[test]
fn bad_spec_exits_with_two() {
    let dir = std::env::temp_dir().join(format!("jacspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"variant":"modulated","N":1,"beta":[0],"a":{"kind":"power","exponent":1},"b":{"kind":"constant","value":0}}"#).unwrap();
    let o = run(&["classify", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(run(&["validate", "--spec", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.join("missing.json");
    assert_ne!(run(&["classify", "--spec", missing.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("jacspec-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("lambda.csv");
    let o = run(&["lambda", "--spec", &spec("blended_n1.json"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "interval_lo,interval_hi\n-1,1\n");
}

#[test]
fn km_closed_forms_demo_is_seeded() {
    let args = ["km-closed-forms", "--spec", &spec("km_example1.json"), "--seed", "7", "--grid", "4"];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&run(&args)));
}

#[test]
fn asymptotics_reports_small_residuals() {
    let o = run(&["asymptotics", "--spec", &spec("power_three_halves.json"), "--z", "1,1", "--size", "2000", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let res = v["residual_plus"].as_array().unwrap();
    assert!(res.iter().all(|r| r.as_f64().unwrap() < 1e-10));
}
