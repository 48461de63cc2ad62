use std::path::Path;
use std::process::{Command, Output};

fn qubench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubench"))
        .args(args)
        .output()
        .expect("qubench runs")
}

fn ok(args: &[&str]) -> String {
    let out = qubench(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(qubench(&["--help"]).status.code(), Some(0));
    assert_eq!(qubench(&["--version"]).status.code(), Some(0));
    assert_eq!(qubench(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qubench(&["solve", "--solver", "sa"]).status.code(), Some(1));
    let missing = qubench(&["solve", "/no/such/model.json", "--solver", "sa"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/model.json"));
}

#[test]
fn gen_embed_solve() {
    let dir = tempfile::tempdir().unwrap();
    let (hw, model, emb) = (
        dir.path().join("p4.txt"),
        dir.path().join("sk.json"),
        dir.path().join("e.json"),
    );
    ok(&["topo", "--pegasus", "4", "--out", p(&hw)]);
    ok(&[
        "gen",
        "--class",
        "SK",
        "--size",
        "10",
        "--seed",
        "3",
        "--out",
        p(&model),
    ]);
    let stats: serde_json::Value = serde_json::from_str(&ok(&[
        "--json",
        "embed",
        p(&model),
        "--method",
        "clique",
        "--hw",
        p(&hw),
        "--out",
        p(&emb),
    ]))
    .unwrap();
    assert_eq!(stats["n"], 10);

    let sa: serde_json::Value =
        serde_json::from_str(&ok(&["solve", p(&model), "--solver", "sa", "--s", "4", "--t", "0.01"])).unwrap();
    let qpu: serde_json::Value = serde_json::from_str(&ok(&[
        "solve",
        p(&model),
        "--solver",
        "qpu",
        "--mock",
        "--s",
        "2",
        "--t",
        "0.1",
        "--embedding",
        p(&emb),
        "--hw",
        p(&hw),
    ]))
    .unwrap();
    assert_eq!(sa["samples"].as_array().unwrap().len(), 4);
    assert_eq!(qpu["solver"], "qpu-mock");
    // Unembedded reads are logical states.
    assert_eq!(qpu["samples"][0]["values"].as_array().unwrap().len(), 10);
}

#[test]
fn suite_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/toy.toml");
    let out = dir.path().join("run");
    let summary: serde_json::Value = serde_json::from_str(&ok(&[
        "--json",
        "suite",
        "--config",
        config,
        "--out",
        p(&out),
        "--mock",
    ]))
    .unwrap();
    // 2 classes x 3 instances x 4 solvers x 4 scenarios.
    assert_eq!(summary["records"], 96);
    assert_eq!(summary["errors"], 0);
    let first = std::fs::read(out.join("results.jsonl")).unwrap();
    ok(&["suite", "--config", config, "--out", p(&out), "--mock", "--resume"]);
    assert_eq!(std::fs::read(out.join("results.jsonl")).unwrap(), first);

    ok(&["analyze", "--results", p(&out), "--milestone", "1"]);
    for f in ["wins_m1.csv", "fails_m1.csv", "summary_m1.json", "ecd_NAT1_10_0.05.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let wins = std::fs::read_to_string(out.join("wins_m1.csv")).unwrap();
    assert!(wins.starts_with("solver,s,t,count,classes"), "{wins}");
}

#[test]
fn screen_reports_a_decision() {
    let out = ok(&[
        "--json",
        "screen",
        "--class",
        "NAT1",
        "--pegasus",
        "4",
        "--size",
        "4",
        "--runs",
        "5",
        "--model-clock",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["decision"] == "ACCEPT" || v["decision"] == "REJECT");
    assert_eq!(v["solvers"].as_array().unwrap().len(), 2);
}

#[test]
fn converge_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "converge",
        "--class",
        "3DLAT",
        "--size",
        "3x3x3",
        "--pegasus",
        "4",
        "--solvers",
        "random,sa",
        "--count",
        "3",
        "--trials",
        "2",
        "--out",
        p(dir.path()),
    ]);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
}
