use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mixvote(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixvote"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn gen(dir: &Path, args: &[&str]) {
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    let out = mixvote(dir, &all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fig1_gmes_run_and_verify() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    gen(dir, &["--construction", "fig1", "--out", "fig1.json"]);
    assert!(dir.join("fig1.meta.json").exists());

    let out = mixvote(dir, &["run", "--rule", "gmes", "--instance", "fig1.json", "--out", "."]);
    assert_eq!(code(&out), 0);
    let allocation = read_json(&dir.join("gmes_out.json"));
    assert_eq!(allocation["cake"], serde_json::json!([["0", "9/10"]]));
    assert_eq!(allocation["goods"], serde_json::json!([]));
    let ledger = read_json(&dir.join("gmes_ledger.json"));
    assert_eq!(ledger["purchases"][0]["amounts"], serde_json::json!(["9/20", "9/20"]));

    let out = mixvote(
        dir,
        &["verify", "--axiom", "ejr-m", "--instance", "fig1.json", "--allocation", "gmes_out.json"],
    );
    assert_eq!(code(&out), 1);
    let witness = &stdout_json(&out)["report"]["witness"];
    assert_eq!(witness["group"], serde_json::json!([0]));
    assert_eq!(witness["t"], "1");
    assert_eq!(witness["max_utility_in_group"], "9/10");

    let out = mixvote(
        dir,
        &["verify", "--axiom", "ejr-1", "--instance", "fig1.json", "--allocation", "gmes_out.json"],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["report"]["pass"], true);
}

#[test]
fn every_rule_runs_on_fig1() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    gen(dir, &["--construction", "fig1", "--out", "fig1.json"]);
    for (rule, sidecar) in [("greedy", "trace"), ("gpav", "solution")] {
        let out = mixvote(dir, &["run", "--rule", rule, "--instance", "fig1.json", "--out", "out"]);
        assert_eq!(code(&out), 0, "{rule}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.join(format!("out/{rule}_{sidecar}.json")).exists());
        assert!(dir.join(format!("out/{rule}_report.json")).exists());
    }
    // MNW needs an instance without cake.
    let out = mixvote(dir, &["run", "--rule", "mnw", "--instance", "fig1.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn prop4_generation_and_mnw() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let out = mixvote(dir, &["gen", "--construction", "prop4", "--beta", "1", "--out", "p4.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["n"], 12);
    let out = mixvote(dir, &["run", "--rule", "mnw", "--instance", "p4.json", "--out", "."]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_json(&dir.join("mnw_all.json")).as_array().unwrap().len(), 3);
    let out = mixvote(
        dir,
        &["verify", "--axiom", "ejr-beta", "--beta", "1", "--instance", "p4.json", "--allocation", "mnw_out.json"],
    );
    assert_eq!(code(&out), 1);
    let witness = &stdout_json(&out)["report"]["witness"];
    assert_eq!(witness["group"], serde_json::json!((0..9).collect::<Vec<_>>()));
    assert_eq!(witness["t"], "3");
}

#[test]
fn scripted_greedy_follows_the_metadata() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    gen(dir, &["--construction", "thm6", "--t", "5/2", "--n", "20", "--out", "thm6.json"]);
    let meta = read_json(&dir.join("thm6.meta.json"));
    fs::write(dir.join("script.json"), meta["script"].to_string()).unwrap();
    let out = mixvote(
        dir,
        &[
            "run", "--rule", "greedy", "--instance", "thm6.json", "--tie-break", "script", "--script",
            "script.json", "--out", ".",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["summary"]["t_star"], serde_json::json!(["2", "1"]));

    let out = mixvote(dir, &["run", "--rule", "greedy", "--instance", "thm6.json", "--tie-break", "script"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn digest_ignores_field_order_and_reruns_match() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("a.json"),
        r#"{"cake_length":"1","goods":["x"],"alpha":"3/2","agents":[{"goods":["x"],"cake":[["0","1/2"]]},{"goods":[],"cake":[["1/4","1"]]}]}"#,
    )
    .unwrap();
    fs::write(
        dir.join("b.json"),
        r#"{"agents":[{"cake":[["0","2/4"]],"goods":["x"]},{"cake":[["1/4","1"]],"goods":[]}],"alpha":"3/2","goods":["x"],"cake_length":"1"}"#,
    )
    .unwrap();
    let run = |file: &str, out: &str| {
        let o = mixvote(dir, &["run", "--rule", "gmes", "--instance", file, "--out", out]);
        assert_eq!(code(&o), 0);
        let mut report = stdout_json(&o);
        report.as_object_mut().unwrap().remove("timing_ms");
        report
    };
    let a1 = run("a.json", "ra");
    let b = run("b.json", "rb");
    assert_eq!(a1["instance_digest"], b["instance_digest"]);
    let a2 = run("a.json", "ra");
    assert_eq!(a1, a2);
    assert_eq!(
        fs::read(dir.join("ra/gmes_ledger.json")).unwrap(),
        fs::read(dir.join("rb/gmes_ledger.json")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&mixvote(dir, &["frobnicate"])), 2);
    assert_eq!(code(&mixvote(dir, &["run", "--rule", "gmes", "--bogus"])), 2);
    assert_eq!(code(&mixvote(dir, &["run", "--rule", "gmes", "--instance", "missing.json"])), 2);
    fs::write(dir.join("bad.json"), "{\"cake_length\": \"1\"").unwrap();
    assert_eq!(code(&mixvote(dir, &["run", "--rule", "gmes", "--instance", "bad.json"])), 2);

    gen(dir, &["--construction", "fig1", "--out", "fig1.json"]);
    let out = mixvote(dir, &["oracle", "--check", "opt", "--instance", "fig1.json", "--grid", "40"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let out = mixvote(dir, &["oracle", "--check", "opt", "--instance", "fig1.json", "--grid", "9"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["result"]["allocation"]["size"], "19/10");
}

#[test]
fn oracle_and_audit_reports() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    gen(dir, &["--construction", "prop1", "--beta-prime", "1/2", "--n", "4", "--out", "p1.json"]);
    let out = mixvote(
        dir,
        &["oracle", "--check", "no-ejr-beta", "--instance", "p1.json", "--beta", "2/5", "--mode", "weak", "--out", "r.json"],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["result"]["impossible"], true);
    assert_eq!(read_json(&dir.join("r.json"))["result"]["impossible"], true);

    gen(dir, &["--construction", "thm4", "--t", "2", "--n", "32", "--delta", "1/100", "--eps", "1/4", "--out", "t4.json"]);
    let meta = read_json(&dir.join("t4.meta.json"));
    fs::write(dir.join("a.json"), meta["allocation"].to_string()).unwrap();
    let out = mixvote(dir, &["audit", "--bound", "ejr-1", "--instance", "t4.json", "--allocation", "a.json"]);
    assert_eq!(code(&out), 0);
    let slack = stdout_json(&out)["report"]["min_slack"].as_str().unwrap().to_string();
    assert_eq!(slack, "1/1600");
}

#[test]
fn bench_writes_a_table() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let out = mixvote(dir, &["bench", "--sizes", "10x4x3,30x6x5", "--seed", "1", "--out", "b"]);
    assert_eq!(code(&out), 0);
    let rows = read_json(&dir.join("b/bench_report.json"))["rows"].as_array().unwrap().len();
    assert_eq!(rows, 2);
}
