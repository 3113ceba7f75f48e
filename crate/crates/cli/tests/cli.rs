use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn coreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coreq")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = coreq(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn stages_chain_from_csv_to_circuit() {
    let dir = TempDir::new().unwrap();
    let data = fixture("two_groups_200.csv");
    let coreset = dir.path().join("coreset.json");
    let ham = dir.path().join("ham.json");
    let qaoa = dir.path().join("qaoa.json");
    let qasm = dir.path().join("circuit.qasm");
    let counts = dir.path().join("counts.json");

    ok(&["coreset", "build", "--in", p(&data), "--m", "5", "--seed", "3", "--out", p(&coreset)]);
    let c = json(&coreset);
    assert_eq!(c["points"].as_array().unwrap().len(), 5);
    assert_eq!(c["source_n"], 200);

    ok(&["ham", "build", "--coreset", p(&coreset), "--order", "0", "--out", p(&ham)]);
    let solved: Value = serde_json::from_str(&ok(&["solve", "--ham", p(&ham)])).unwrap();
    let maximizers: Vec<String> =
        solved["maximizers"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_owned()).collect();
    assert!(!maximizers.is_empty());

    ok(&[
        "qaoa", "run", "--ham", p(&ham), "--shots", "2048", "--data", p(&data), "--coreset", p(&coreset), "--out",
        p(&qaoa),
    ]);
    let q = json(&qaoa);
    assert!(q["F"].as_f64().unwrap() <= solved["best_energy"].as_f64().unwrap() + 1e-9);
    let total: u64 = q["histogram"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 2048);
    assert!(q["modal_full_cost"].as_f64().unwrap() > 0.0);

    ok(&["circuit", "compile", "--ham", p(&ham), "--params", p(&qaoa), "--out", p(&qasm), "--counts", p(&counts)]);
    assert_eq!(json(&counts)["cnot"], 28);
    let text = fs::read_to_string(&qasm).unwrap();
    assert!(text.starts_with("OPENQASM 2.0;"));
    assert_eq!(text.lines().filter(|l| l.starts_with("cx ")).count(), 28);
}

#[test]
fn solve_with_data_reports_the_full_cost_bound() {
    let dir = TempDir::new().unwrap();
    let data = fixture("blobs3_4d.csv");
    let coreset = dir.path().join("c.json");
    ok(&["coreset", "build", "--in", p(&data), "--m", "6", "--variant", "blk17", "--out", p(&coreset)]);
    let bound: Value = serde_json::from_str(&ok(&["solve", "--coreset", p(&coreset), "--data", p(&data)])).unwrap();
    assert_eq!(bound["n_maximizers"], 2);
    let full = bound["full_cost"].as_f64().unwrap();
    let cluster: Value = serde_json::from_str(&ok(&["cluster", "run", "--in", p(&data)])).unwrap();
    assert!(cluster["full_data_cost"].as_f64().unwrap() <= full * (1.0 + 1e-9));
}

#[test]
fn generated_data_is_reproducible_and_valid() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"n_total": 300, "dim": 3}"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["data", "gen", "--spec", p(&spec), "--seed", "7", "--out", p(&a)]);
    ok(&["data", "gen", "--spec", p(&spec), "--seed", "7", "--out", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(ok(&["data", "validate", p(&a)]).contains("300 points, 3 dimensions"));

    fs::write(&spec, r#"{"n": 300}"#).unwrap();
    assert!(!coreq(&["data", "gen", "--spec", p(&spec), "--out", p(&a)]).status.success());
}

#[test]
fn bench_run_writes_results_runs_and_manifest() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    let cfg = serde_json::json!({
        "data": { "kind": "csv", "path": fixture("blobs3_4d.csv") },
        "m_list": [5, 8],
        "orders": [0, "inf"],
        "bound_m": [5],
        "repeats": 2,
        "seed": 11
    });
    fs::write(&config, cfg.to_string()).unwrap();
    let out = dir.path().join("out");
    ok(&["bench", "run", "--config", p(&config), "--out", p(&out)]);
    for file in ["results.csv", "runs.csv", "manifest.json"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    // header, three methods at two sizes, two bounds at m = 5
    assert_eq!(results.lines().count(), 1 + 6 + 2);
    assert_eq!(json(&out.join("manifest.json"))["config"]["seed"], 11);
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = TempDir::new().unwrap();
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2\n3,4\n5\n").unwrap();
    let out = coreq(&["data", "validate", p(&ragged)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = coreq(&["coreset", "build", "--in", p(&fixture("blobs3_4d.csv")), "--m", "4", "--variant", "nope"]);
    assert!(!out.status.success());

    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"data": {"kind": "csv", "path": "x.csv"}, "repeatz": 3}"#).unwrap();
    let out = coreq(&["bench", "run", "--config", p(&config), "--out", p(dir.path())]);
    assert!(!out.status.success());
}
