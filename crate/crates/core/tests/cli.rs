use std::process::Command;

use cfgloc::harness::fixture_dir;

fn cfgloc(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cfgloc")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn localize(name: &str, extra: &[&str]) -> (i32, String) {
    let d = fixture_dir(name);
    let (c, t, r) = (d.join("configs"), d.join("topology.json"), d.join("requirements.json"));
    let mut args = vec!["localize", "--configs", c.to_str().unwrap(), "--topology", t.to_str().unwrap(), "--requirements", r.to_str().unwrap()];
    args.extend_from_slice(extra);
    cfgloc(&args)
}

#[test]
fn exit_codes() {
    let (code, out) = localize("bgp_pair", &[]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "compliant");
    let (code, out) = localize("static_chain", &["--rank-mode", "all", "--mss-strategy", "linear"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "violated");
    assert_eq!(v["rankMode"], "all");
    assert_eq!(cfgloc(&["localize", "--configs", "/nonexistent", "--topology", "x", "--requirements", "y"]).0, 2);
}

#[test]
fn text_output_and_scenario_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("scenarios.jsonl");
    let (code, out) = localize("triangle_inbound_acl", &["--output", "text", "--no-dedup-scenarios", "--scenario-log", log.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.starts_with("status: violated"));
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 6);
}

#[test]
fn inject_writes_a_loadable_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("case");
    let src = fixture_dir("campus");
    let (code, _) = cfgloc(&["inject", "--case", src.to_str().unwrap(), "--type", "OmitAcl", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let truth: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("ground_truth.json")).unwrap()).unwrap();
    assert_eq!(truth["type"], "OmitAcl");
    let c = out.join("configs");
    let (t, r) = (out.join("topology.json"), out.join("requirements.json"));
    let (code, _) = cfgloc(&["localize", "--configs", c.to_str().unwrap(), "--topology", t.to_str().unwrap(), "--requirements", r.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn bench_prints_csv() {
    let (code, out) = cfgloc(&["bench", "--suite", "table2", "--sizes", "4", "--seeds", "1", "--rank-modes", "smallest"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "errorType,topology,size,seed,rankMode,precision,recall,checks,wallMs");
    assert_eq!(lines.count(), 7);
}
