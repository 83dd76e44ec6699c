use std::path::Path;
use std::process::{Command, Output};

use ancestrec::{AnModel, ModelOptions, C64};
use serde_json::Value;

fn run(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ancestrec"));
    cmd.args(args).env_remove("ANCESTREC_CACHE");
    if let Some(dir) = cache {
        cmd.env("ANCESTREC_CACHE", dir);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.code().is_some(), "killed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn value(entry: &Value) -> C64 {
    C64::new(entry["value"][0].as_f64().unwrap(), entry["value"][1].as_f64().unwrap())
}

fn find<'a>(doc: &'a Value, g: u64, ins: &[[u64; 2]]) -> &'a Value {
    let want: Vec<Value> = ins.iter().map(|p| serde_json::json!(p)).collect();
    doc["correlators"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["g"] == g && e["insertions"].as_array().unwrap() == &want)
        .unwrap_or_else(|| panic!("missing g={g} {ins:?}"))
}

#[test]
fn a1_table_contains_known_intersection() {
    let out = run(&["correlators", "--gmax", "2", "--nmax", "1"], None);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["model"]["type"], "A1");
    let v = value(find(&doc, 2, &[[1, 4]]));
    assert!((v - C64::new(1.0 / 1152.0, 0.0)).norm() < 1e-12);
}

#[test]
fn a2_genus_zero_block_is_structure_constants() {
    let out = run(&["correlators", "--model", "A2", "--t", "[[-1,0],[0,0]]", "--gmax", "0", "--nmax", "3"], None);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let m = AnModel::build(2, &[C64::new(-1.0, 0.0), C64::new(0.0, 0.0)], &ModelOptions::default()).unwrap();
    for (a, b, c) in [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)] {
        let ins = [[a + 1, 0], [b + 1, 0], [c + 1, 0]];
        let v = value(find(&doc, 0, &ins));
        assert!((v - m.three_point(a as usize, b as usize, c as usize)).norm() < 1e-10, "{ins:?}");
    }
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(run(&["correlators", "--model", "A0"], None).status.code(), Some(2));
    assert_eq!(run(&["correlators", "--model", "A2", "--t", "[1]"], None).status.code(), Some(2));
    assert_eq!(run(&["correlators", "--model", "A2", "--t", "[0,0]"], None).status.code(), Some(2));
    assert_eq!(run(&["correlators", "--tol", "-1"], None).status.code(), Some(2));
    assert_eq!(run(&["correlators", "--order", "1"], None).status.code(), Some(2));
    let one = run(&["sweep", "--model", "A2", "--sweep", "{\"eps\":[0.1]}"], None);
    assert_eq!(one.status.code(), Some(2));
}

#[test]
fn verify_passes_and_detects_corrupted_r() {
    let a1 = run(&["verify", "--gmax", "2", "--nmax", "2"], None);
    assert_eq!(a1.status.code(), Some(0));
    assert_eq!(json(&a1)["pass"], true);
    let args = ["verify", "--model", "A2", "--t", "[[-0.6,0.2],[0.15,-0.1]]", "--gmax", "2", "--nmax", "2"];
    let a2 = run(&args, None);
    assert_eq!(a2.status.code(), Some(0));
    let mut bad_args = args.to_vec();
    bad_args.extend(["--perturb-r", "1e-3"]);
    let bad = run(&bad_args, None);
    assert_eq!(bad.status.code(), Some(1));
    let doc = json(&bad);
    let unit = doc["checks"].as_array().unwrap().iter().find(|c| c["name"] == "r_unitarity").unwrap();
    assert_eq!(unit["pass"], false);
}

#[test]
fn caustic_mode_and_reports() {
    let caustic = run(&["correlators", "--model", "A2", "--t", "[0,0]", "--caustic", "--gmax", "1", "--nmax", "2"], None);
    assert_eq!(caustic.status.code(), Some(0));
    assert!(!json(&caustic)["correlators"].as_array().unwrap().is_empty());

    let eps = "{\"eps\":[0.125,0.0625,0.03125,0.015625,0.0078125]}";
    let sweep = run(&["sweep", "--model", "A2", "--gmax", "1", "--nmax", "2", "--sweep", eps], None);
    assert_eq!(sweep.status.code(), Some(0));
    assert!(json(&sweep)["max_deviation"].as_f64().unwrap() < 1e-3);

    let t2 = run(&["theorem2", "--model", "A2", "--t", "[-0.1,0]", "--gmax", "1", "--deg", "1"], None);
    assert_eq!(t2.status.code(), Some(0));
    assert!(json(&t2)["max_rel_err"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn reports_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let base = ["correlators", "--model", "A2", "--t", "[[-1,0],[0.3,0]]", "--gmax", "1", "--nmax", "2", "--report"];
    let mut a = base.to_vec();
    a.push(first.to_str().unwrap());
    let mut b = base.to_vec();
    b.push(second.to_str().unwrap());

    assert_eq!(run(&a, None).status.code(), Some(0));
    assert_eq!(run(&b, Some(&cache)).status.code(), Some(0));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);

    assert_eq!(run(&b, Some(&cache)).status.code(), Some(0));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    std::fs::write(&entries[0], "{broken").unwrap();
    let out = run(&b, Some(&cache));
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt cache entry"));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}
