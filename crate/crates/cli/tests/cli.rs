use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idaracer")).args(args).env("IDARACER_COLOR", "0").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn analyze_reports_race_with_exit_one() {
    let o = run(&["analyze", &corpus("prodcons.ida")]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("potentially-racy  item       prod:12      cons:21"), "{out}");
    assert!(out.contains("conflicting 6  potential 1"));
    assert!(!out.contains('\x1b'));
}

#[test]
fn pingpong_under_ceiling_without_round_robin_is_clean() {
    let o = run(&["analyze", &corpus("pingpong.ida"), "--mutex=ceiling", "--no-round-robin"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn analyze_json_with_facts_and_trace() {
    let o = run(&["analyze", &corpus("prodcons.ida"), "--format", "json", "--trace", "--dump-facts"]);
    let v = json(&o);
    assert_eq!(v["metrics"]["conflicting"], 6);
    assert_eq!(v["metrics"]["precisionPct"], 100.0);
    assert_eq!(v["config"]["mutexMode"], "plain");
    let racy: Vec<&Value> = v["pairs"].as_array().unwrap().iter().filter(|p| p["verdict"] == "potentially-racy").collect();
    assert_eq!(racy.len(), 1);
    assert!(racy[0]["witness"]["steps"].as_array().is_some_and(|s| !s.is_empty()));
    let rows = v["facts"]["statements"].as_array().unwrap();
    let row = rows.iter().find(|r| r["stmt"] == "cons:23").unwrap();
    assert_eq!(row["prio"], serde_json::json!([2, 2]));
}

#[test]
fn oracle_exit_codes() {
    let f = corpus("prodcons.ida");
    assert_eq!(code(&run(&["check-oib", &f, "--s1", "cons:21", "--s2", "prod:12"])), 1);
    assert_eq!(code(&run(&["check-oib", &f, "--s1", "prod:13", "--s2", "cons:23"])), 0);
    assert_eq!(code(&run(&["mhp", &f, "--s1", "prod:12", "--s2", "cons:21"])), 1);
    let o = run(&["mhp", &f, "--s1", "prod:13", "--s2", "cons:23", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["holds"], false);
}

#[test]
fn trace_marks_block_entry_and_occurrence() {
    let o = run(&["check-oib", &corpus("prodcons.ida"), "--s1", "cons:21", "--s2", "prod:12", "--trace"]);
    let out = stdout(&o);
    assert!(out.contains("<- enters block"));
    assert!(out.lines().last().unwrap().contains("prod:12  <- occurrence"), "{out}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["analyze", "/nonexistent.ida"])), 2);
    assert_eq!(code(&run(&["check-oib", &corpus("prodcons.ida"), "--s1", "cons:99", "--s2", "prod:12"])), 2);
    assert_eq!(code(&run(&["check-oib", &corpus("prodcons.ida"), "--s1", "prod:11", "--s2", "prod:12"])), 2);
    assert_eq!(code(&run(&["analyze", &corpus("prodcons.ida"), "--mutex", "spin"])), 2);
    let dir = std::env::temp_dir().join(format!("idaracer-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.ida");
    std::fs::write(&bad, "main { start; } isr h { block; }").unwrap();
    let o = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("block not permitted in ISR"));
    std::fs::write(&bad, "main { start; ").unwrap();
    assert_eq!(code(&run(&["analyze", bad.to_str().unwrap()])), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn explore_and_facts() {
    let o = run(&["explore", &corpus("prodcons.ida"), "--format", "json", "--loop-bound", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["states"].as_u64().unwrap() > 0);
    assert_eq!(v["capsHit"]["stateCap"], false);
    let o = run(&["facts", &corpus("prodcons.ida")]);
    assert!(stdout(&o).lines().any(|l| l.starts_with("prod:12") && l.contains("SuspBlock(cons)")));
}

#[test]
fn corpus_writes_csv_and_passes_audit() {
    let dir = std::env::temp_dir().join(format!("idaracer-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("table.csv");
    let o = run(&["corpus", &corpus(""), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("| prodcons |"));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("Program,LoC"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fuzz_small_run() {
    let o = run(&["fuzz", "--seed", "3", "-n", "10", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["programs"], 10);
    assert_eq!(v["counterexamples"].as_array().unwrap().len(), 0);
}
