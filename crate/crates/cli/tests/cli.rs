use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jcc_sched::eval::RunConfig;
use jcc_sched::netdata::bundled_ieee13;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jcc-sched"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(["--quiet", "--n-train", "80", "--n-heldout", "300"]).args(args).output().unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = RunConfig::bundled();
    cfg.cases.truncate(2);
    cfg.epsilons = vec![0.1, 0.25];
    cfg.experiment.n_train = 60;
    cfg.experiment.n_heldout = 200;
    cfg.experiment.area_points = 500;
    let p = dir.join("run.json");
    fs::write(&p, cfg.to_json().unwrap()).unwrap();
    p
}

#[test]
fn solve_writes_solution_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--method", "svc", "--epsilon", "0.05", "--case", "ieee13"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("jcc-out/solutions/beta/svc-eps0.05.json")).unwrap()).unwrap();
    assert_eq!(sol["status"], "optimal");
    let log = fs::read_to_string(dir.path().join("jcc-out/log.jsonl")).unwrap();
    let solve: Value = log.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).find(|v| v["stage"] == "solve").unwrap();
    assert!(solve["solve_time_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn pipeline_steps_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["gen-samples", "--dist", "gaussian"][..],
        &["train-sets", "--epsilon", "0.1", "--method", "hull", "--dist", "gaussian"],
        &["solve", "--method", "hull", "--epsilon", "0.1", "--dist", "gaussian"],
        &["evaluate", "--method", "hull", "--epsilon", "0.1", "--dist", "gaussian"],
    ] {
        let out = run(d, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(d.join("jcc-out/samples/gaussian/train.csv").exists());
    assert!(d.join("jcc-out/sets/gaussian/hull-eps0.1.json").exists());
    let ev: Value = serde_json::from_str(&fs::read_to_string(d.join("jcc-out/eval/gaussian/hull-eps0.1.json")).unwrap()).unwrap();
    assert_eq!(ev["violation_out_of_sample"]["n"], 300);
    assert!(ev["violation_out_of_sample"]["half_width"].is_number());
    // the stored set was used rather than retrained
    let log = fs::read_to_string(d.join("jcc-out/log.jsonl")).unwrap();
    assert!(log.lines().any(|l| l.contains("\"load_sets\"")));
}

#[test]
fn bad_epsilon_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["train-sets", "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["class"], "config");
    assert!(e["error"]["message"].as_str().unwrap().contains("epsilon"));
}

#[test]
fn unknown_flags_and_threads_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["solve", "--bogus"]).status.code(), Some(2));
    let out = bin().current_dir(dir.path()).env("JCC_SCHED_THREADS", "zero").args(["gen-samples"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(bin().arg("--help").output().unwrap().status.success());
}

#[test]
fn corrupt_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(dir.path(), &["evaluate", "--method", "svc", "--epsilon", "0.1", "--solution", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["class"], "data");
    let samples = dir.path().join("jcc-out/samples/beta");
    fs::create_dir_all(&samples).unwrap();
    fs::write(samples.join("train.csv"), "t,node,value\n0,0,-3\n").unwrap();
    let out = run(dir.path(), &["solve", "--method", "box", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn infeasible_comfort_band_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut json: Value = serde_json::from_str(&bundled_ieee13().to_json().unwrap()).unwrap();
    for b in json["buildings"].as_array_mut().unwrap() {
        b["p_max"] = Value::from(0.0001);
    }
    let case = dir.path().join("weak.json");
    fs::write(&case, json.to_string()).unwrap();
    let out = run(dir.path(), &["--case", case.to_str().unwrap(), "solve", "--method", "box", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let e = error_json(&out);
    assert_eq!(e["error"]["class"], "solver");
    assert!(e["error"]["message"].as_str().unwrap().contains("comfort"));
}

#[test]
fn reproduce_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut tables = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("o{k}"));
        let out = bin()
            .args(["--quiet", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "reproduce", "--seed", "7"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let read = |n: &str| fs::read(out_dir.join("report").join(n)).unwrap();
        tables.push((read("report.csv"), read("areas.csv"), read("report.json"), read("../samples/beta/heldout.csv")));
    }
    assert_eq!(tables[0], tables[1]);
    let csv = String::from_utf8(tables[0].0.clone()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 4);
    assert!(csv.lines().next().unwrap().contains("half_width_out"));
}
