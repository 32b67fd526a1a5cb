use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn thermoform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoform")).args(args).env_remove("THERMOFORM_BUDGET_CAP").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn pressure_report_shape() {
    let o = thermoform(&["pressure", "--builtin", "notmix2", "--s", "2", "--N", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["tool"], "thermoform");
    assert_eq!(r["operation"], "pressure");
    assert_eq!(r["input"]["source"], "builtin:notmix2");
    assert_eq!(r["input"]["digest"].as_str().unwrap().len(), 64);
    assert!((r["results"]["value"].as_f64().unwrap() - 5f64.ln()).abs() < 1e-12);
    for key in ["parameters", "witnesses", "budgets", "timings"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn bundle_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    let o = thermoform(&["kusuoka", "--builtin", "notmix2", "--n-max", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["operation"], "kusuoka");
    let cyl = std::fs::read_to_string(out.join("cylinders.csv")).unwrap();
    let mut lines = cyl.lines();
    assert_eq!(lines.next(), Some("word,length,measure,norm,zero_product"));
    assert_eq!(cyl.lines().count(), 1 + 2 + 4 + 8);
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "(1)");
    assert!((first[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-10);
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("n,upper,periodic_lower,spectral_diagnostic\n"));
    assert!(!series.contains('\r') && !cyl.contains('\r'));
}

#[test]
fn header_only_csv_without_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermoform(&["inspect", "--builtin", "nilpotent2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("series.csv")).unwrap(), "n,upper,periodic_lower,spectral_diagnostic\n");
    assert_eq!(std::fs::read_to_string(dir.path().join("cylinders.csv")).unwrap(), "word,length,measure,norm,zero_product\n");
    let r = json(&o);
    assert_eq!(r["witnesses"]["zero_product"], serde_json::json!([1, 1]));
}

#[test]
fn csv_format_on_stdout() {
    let o = thermoform(&["radius", "--builtin", "notmix2", "--p", "inf", "--N", "2", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,upper,periodic_lower,spectral_diagnostic"));
    assert!(text.lines().nth(2).unwrap().starts_with("2,2,2,"));
}

#[test]
fn correlate_alternates() {
    let o = thermoform(&["correlate", "--builtin", "notmix2", "--n-max", "4"]);
    assert_eq!(code(&o), 0);
    let series = json(&o)["results"]["series"].as_array().unwrap().clone();
    let v: Vec<f64> = series.iter().map(|p| p[1].as_f64().unwrap()).collect();
    for (got, want) in v.iter().zip([0.16, 0.34, 0.16, 0.34]) {
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn classify_runs_every_check() {
    let o = thermoform(&["classify", "--builtin", "alpha(3/5,4/5)", "--n-max", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o)["results"].clone();
    assert_eq!(r["bernoulli"]["done"]["outcome"], "counterexample-pair");
    assert!(r["cross_checks"].as_array().unwrap().iter().all(|c| c["holds"] == true));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // input errors
    assert_eq!(code(&thermoform(&["pressure", "--builtin", "notmix2", "--s", "0"])), 2);
    assert_eq!(code(&thermoform(&["pressure", "--builtin", "nosuch"])), 2);
    let trailing = write(dir.path(), "bad.json", "{\"dimension\": 2,\n \"matrices\": [[[0,1],[1,0]], [[1,0],[0,1]],]}");
    let o = thermoform(&["pressure", "--input", &trailing]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let shape = write(dir.path(), "shape.json", r#"{"dimension": 2, "matrices": [[[0,1,2],[1,0,2]], [[1,0],[0,1]]]}"#);
    assert_eq!(code(&thermoform(&["pressure", "--input", &shape])), 2);
    // numeric failure
    let reducible = write(dir.path(), "red.json", r#"{"dimension": 2, "matrices": [[[1,0],[0,2]], [[3,0],[0,1]]]}"#);
    let o = thermoform(&["kusuoka", "--input", &reducible]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).to_lowercase().contains("degenerate"));
    // budget
    let o = Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .args(["pressure", "--builtin", "notmix2", "--s", "3", "--N", "8"])
        .env("THERMOFORM_BUDGET_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(code(&o), 4);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let o = thermoform(&["kusuoka", "--builtin", "eps(1/4)", "--n-max", "7", "--threads", threads]);
        assert_eq!(code(&o), 0);
        let mut r = json(&o);
        r.as_object_mut().unwrap().remove("timings");
        r
    };
    assert_eq!(run("1"), run("4"));
    let run_csv = |threads: &str| {
        thermoform(&["pressure", "--builtin", "rankone4", "--s", "1.5", "--N", "6", "--format", "csv", "--threads", threads]).stdout
    };
    assert_eq!(run_csv("1"), run_csv("3"));
}
