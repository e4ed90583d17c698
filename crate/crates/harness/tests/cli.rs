use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn opineq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opineq"))
        .args(args)
        .env_remove("OPINEQ_THREADS")
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opineq-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn spec(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name).display().to_string()
}

fn gen(spec_name: &str, dir: &Path) -> String {
    let out = dir.join("instance.json").display().to_string();
    let o = opineq(&["gen", "--spec", &spec(spec_name), "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_then_ratio_bound() {
    let dir = scratch("ratio");
    let inst = gen("kantorovich.json", &dir);
    let text = std::fs::read_to_string(&inst).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["opineq-schema"], 1);
    let a = &v["axes"][0][0];
    assert_eq!(a["rows"], 4);
    assert_eq!(a["data"].as_array().unwrap().len(), 16);
    assert_eq!(a["data"][0].as_array().unwrap().len(), 2);

    let o = opineq(&["bounds", "--instance", &inst, "--theorem", "thm2.9", "--side", "upper"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let lambda = v["reports"][0]["scalar_constant"].as_f64().unwrap();
    assert!((lambda - 1.125).abs() < 1e-6, "{lambda}");
    assert_eq!(v["reports"][0]["side"], "upper");
}

#[test]
fn gen_is_deterministic() {
    let a = std::fs::read_to_string(gen("kantorovich.json", &scratch("det-a"))).unwrap();
    let b = std::fs::read_to_string(gen("kantorovich.json", &scratch("det-b"))).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sobolev_command() {
    let dir = scratch("sobolev");
    let inst = gen("sobolev.json", &dir);
    let o = opineq(&["sobolev", "--instance", &inst, "--m", "3", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = &v["constants"];
    let (c1, c2, c3p) = (c["c1"].as_f64().unwrap(), c["c2"].as_f64().unwrap(), c["c3_prime"].as_f64().unwrap());
    assert!((c1 - c3p / c2).abs() <= 1e-12 * (1.0 + c1));
    assert_eq!(v["exponents"]["q"], 6.0);
    assert!(v["mean"]["verdict"]["holds"].as_bool().unwrap());
}

#[test]
fn every_bound_theorem_runs() {
    let dir = scratch("all-bounds");
    let inst = gen("sobolev.json", &dir);
    for thm in ["thm2.3", "thm2.4", "thm2.9", "thm2.15"] {
        let o = opineq(&["bounds", "--instance", &inst, "--theorem", thm]);
        assert_eq!(o.status.code(), Some(0), "{thm}: {}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn verify_writes_report() {
    let dir = scratch("verify");
    let report = dir.join("r.json").display().to_string();
    let o = opineq(&["verify", "--suite", "kantorovich", "--trials", "3", "--seed", "5", "--report", &report]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["opineq-schema"], 1);
    assert_eq!(v["suites"][0]["suite"], "kantorovich");
    assert_eq!(v["suites"][0]["passed"], 3);
}

#[test]
fn usage_and_input_errors_exit_2() {
    let dir = scratch("errors");
    assert_eq!(opineq(&["bounds"]).status.code(), Some(2));
    assert_eq!(opineq(&["verify", "--suite", "thm9", "--report", "x"]).status.code(), Some(2));

    let inst = gen("kantorovich.json", &dir);
    let o = opineq(&["bounds", "--instance", &inst, "--theorem", "thm7"]);
    assert_eq!(o.status.code(), Some(2));

    let text = std::fs::read_to_string(&inst).unwrap().replace("\"opineq-schema\": 1", "\"opineq-schema\": 3");
    let bad = dir.join("v3.json");
    std::fs::write(&bad, text).unwrap();
    let o = opineq(&["bounds", "--instance", bad.to_str().unwrap(), "--theorem", "thm2.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    let missing = dir.join("nope.json");
    let o = opineq(&["gen", "--spec", missing.to_str().unwrap(), "--out", "x.json"]);
    assert_eq!(o.status.code(), Some(2));

    let report = dir.join("r.json").display().to_string();
    let o = Command::new(env!("CARGO_BIN_EXE_opineq"))
        .args(["verify", "--suite", "kantorovich", "--trials", "1", "--report", &report])
        .env("OPINEQ_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_spec_field_is_named() {
    let dir = scratch("bad-spec");
    let text = std::fs::read_to_string(spec("kantorovich.json")).unwrap().replace("\"dim\": 4", "\"dim\": 64");
    let path = dir.join("spec.json");
    std::fs::write(&path, text).unwrap();
    let o = opineq(&["gen", "--spec", path.to_str().unwrap(), "--out", dir.join("o.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dim"));
}
