//! End-to-end tests of the command-line interface: exit codes, report
//! schema conformance, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_speclite"))
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("SPECLITE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../../../report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).expect("schema compiles")
}

fn assert_valid(report: &serde_json::Value) {
    let validator = schema();
    let errors: Vec<String> = validator
        .iter_errors(report)
        .map(|e| format!("{e}"))
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn parse_subcommand_roundtrips_to_stdout() {
    let spec = specs_dir().join("queue.mli.spec");
    let out = run(&["parse", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("val push : 'a t -> 'a -> unit"));
}

#[test]
fn parse_json_report_validates() {
    let spec = specs_dir().join("queue.mli.spec");
    let out = run(&["parse", spec.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_valid(&report);
    assert_eq!(report["parse"]["declarations"], 7);
}

#[test]
fn analyze_reports_non_executable_finding_with_exit_zero() {
    let spec = specs_dir().join("graph.mli.spec");
    let out = run(&["analyze", spec.to_str().unwrap(), "--json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "analysis success; finding is data"
    );
    let report = stdout_json(&out);
    assert_valid(&report);
    let analysis = report["analysis"].as_array().unwrap();
    let has_path = analysis
        .iter()
        .find(|d| d["name"] == "has_path")
        .expect("has_path analyzed");
    assert_eq!(has_path["executable"]["verdict"], "non-executable");
    assert_eq!(
        has_path["executable"]["reasons"][0]["reason"],
        "unbounded-existential"
    );
    let transfer_free = analysis.iter().all(|d| d["name"] != "transfer");
    assert!(transfer_free);
}

#[test]
fn analyze_flags_transfer_incompatible() {
    let spec = specs_dir().join("queue.mli.spec");
    let out = run(&["analyze", spec.to_str().unwrap(), "--json"]);
    let report = stdout_json(&out);
    let analysis = report["analysis"].as_array().unwrap();
    let transfer = analysis.iter().find(|d| d["name"] == "transfer").unwrap();
    assert_eq!(transfer["stm"]["verdict"], "incompatible");
    assert_eq!(transfer["stm"]["reason"], "multiple SUT parameters");
}

#[test]
fn clean_test_run_exits_zero() {
    let spec = specs_dir().join("queue_exec.mli.spec");
    let out = run(&[
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "queue_two_list",
        "--seed",
        "7",
        "--count",
        "300",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_valid(&report);
    assert_eq!(report["test"]["pass_count"], 300);
    assert_eq!(report["config"]["seed"], 7);
}

#[test]
fn mutant_test_run_exits_one_with_shrunk_trace() {
    let spec = specs_dir().join("queue_exec.mli.spec");
    let out = run(&[
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "mutant_Q3",
        "--seed",
        "7",
        "--count",
        "5000",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_valid(&report);
    let shrunk = &report["test"]["shrunk"];
    let trace = shrunk["trace"].as_array().unwrap();
    assert_eq!(trace.len(), 2);
    assert_eq!(trace[0]["op"], "create");
    assert_eq!(trace[1]["op"], "pop");
}

#[test]
fn reports_are_reproducible_modulo_timing() {
    let spec = specs_dir().join("queue_exec.mli.spec");
    let args = [
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "queue_two_list",
        "--seed",
        "7",
        "--count",
        "100",
        "--json",
    ];
    let a = stdout_json(&run(&args));
    let b = stdout_json(&run(&args));
    assert_eq!(
        speclite::report::without_timing(a),
        speclite::report::without_timing(b)
    );
}

#[test]
fn seed_echo_reproduces_the_run() {
    let spec = specs_dir().join("queue_exec.mli.spec");
    let first = stdout_json(&run(&[
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "mutant_Q2",
        "--seed",
        "99",
        "--count",
        "5000",
        "--json",
    ]));
    let echoed = first["config"]["seed"].as_u64().unwrap().to_string();
    let second = stdout_json(&run(&[
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "mutant_Q2",
        "--seed",
        &echoed,
        "--count",
        "5000",
        "--json",
    ]));
    assert_eq!(
        speclite::report::without_timing(first),
        speclite::report::without_timing(second)
    );
}

#[test]
fn env_seed_is_default_and_flag_wins() {
    let spec = specs_dir().join("queue_exec.mli.spec");
    let with_env = bin()
        .args([
            "test",
            spec.to_str().unwrap(),
            "--impl",
            "queue_two_list",
            "--count",
            "10",
            "--json",
        ])
        .env("SPECLITE_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&with_env)["config"]["seed"], 123);

    let flag_wins = bin()
        .args([
            "test",
            spec.to_str().unwrap(),
            "--impl",
            "queue_two_list",
            "--count",
            "10",
            "--seed",
            "5",
            "--json",
        ])
        .env("SPECLITE_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&flag_wins)["config"]["seed"], 5);
}

#[test]
fn config_file_supplies_generation_settings() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("gen.json");
    std::fs::write(
        &config_path,
        r#"{ "seed": 21, "trace_count": 17, "max_trace_len": 5 }"#,
    )
    .unwrap();
    let spec = specs_dir().join("queue_exec.mli.spec");
    let out = run(&[
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "queue_two_list",
        "--config",
        config_path.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["config"]["seed"], 21);
    assert_eq!(report["config"]["trace_count"], 17);
    assert_eq!(report["test"]["traces_run"], 17);
}

#[test]
fn human_and_json_modes_agree_on_verdicts() {
    let spec = specs_dir().join("queue_exec.mli.spec");
    let base = [
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "mutant_Q4",
        "--seed",
        "3",
        "--count",
        "2000",
    ];
    let human = run(&base);
    let mut json_args = base.to_vec();
    json_args.push("--json");
    let json_out = run(&json_args);
    assert_eq!(human.status.code(), json_out.status.code());
    let human_text = String::from_utf8_lossy(&human.stdout);
    let report = stdout_json(&json_out);
    let verdict = report["test"]["shrunk"]["verdict"]["verdict"]
        .as_str()
        .unwrap();
    let human_phrase = match verdict {
        "pre-violation" => "precondition violated",
        "post-violation" => "postcondition violated",
        "modifies-violation" => "frame violated",
        "raises-violation" => "raises condition",
        "unexpected-exception" => "unexpected exception",
        "type-invariant-violation" => "type invariant",
        other => other,
    };
    assert!(human_text.contains("FAIL"));
    assert!(
        human_text.contains(human_phrase),
        "human output does not mention `{human_phrase}`:\n{human_text}"
    );
}

#[test]
fn path_subcommand_agreement_and_violation_codes() {
    let chain = specs_dir().join("graphs/chain.graph");
    let ok = run(&[
        "path",
        chain.to_str().unwrap(),
        "--from",
        "a",
        "--to",
        "d",
        "--monitors",
    ]);
    assert_eq!(ok.status.code(), Some(0));

    let islands = specs_dir().join("graphs/two_islands.graph");
    let no_path = run(&[
        "path",
        islands.to_str().unwrap(),
        "--from",
        "a",
        "--to",
        "c",
        "--json",
    ]);
    assert_eq!(no_path.status.code(), Some(0), "no path is still agreement");
    let report = stdout_json(&no_path);
    assert_valid(&report);
    assert_eq!(report["path"]["result"], false);
    assert_eq!(report["path"]["oracle"], false);

    let g2 = run(&[
        "path",
        chain.to_str().unwrap(),
        "--from",
        "a",
        "--to",
        "d",
        "--impl",
        "mutant_G2",
        "--json",
    ]);
    assert_eq!(g2.status.code(), Some(1), "oracle cross-check must fail");
    let report = stdout_json(&g2);
    assert_valid(&report);

    let g2_monitored = run(&[
        "path",
        chain.to_str().unwrap(),
        "--from",
        "a",
        "--to",
        "d",
        "--impl",
        "mutant_G2",
        "--monitors",
        "--json",
    ]);
    assert_eq!(g2_monitored.status.code(), Some(1));
    let report = stdout_json(&g2_monitored);
    assert_eq!(report["path"]["failure"]["kind"], "monitor-violation");
}

#[test]
fn exit_codes_for_bad_inputs() {
    // Unreadable path: usage error.
    let out = run(&["analyze", "/does/not/exist.mli.spec"]);
    assert_eq!(out.status.code(), Some(3));

    // Unknown implementation: usage error before any test runs.
    let spec = specs_dir().join("queue_exec.mli.spec");
    let out = run(&["test", spec.to_str().unwrap(), "--impl", "nope"]);
    assert_eq!(out.status.code(), Some(3));

    // Malformed spec: spec error.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mli.spec");
    std::fs::write(&bad, "val : : :").unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Ill-typed spec: spec error.
    let illtyped = dir.path().join("illtyped.mli.spec");
    std::fs::write(
        &illtyped,
        "val f : int -> bool\n(*@ b = f x\n    ensures 1 = true *)",
    )
    .unwrap();
    let out = run(&["analyze", illtyped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown vertex: usage error.
    let chain = specs_dir().join("graphs/chain.graph");
    let out = run(&["path", chain.to_str().unwrap(), "--from", "zz", "--to", "a"]);
    assert_eq!(out.status.code(), Some(3));

    // Malformed graph file: spec error.
    let badgraph = dir.path().join("bad.graph");
    std::fs::write(&badgraph, "vertices: a b\nedge: a zz\n").unwrap();
    let out = run(&[
        "path",
        badgraph.to_str().unwrap(),
        "--from",
        "a",
        "--to",
        "b",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Bad flags: usage error.
    let out = run(&["test", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn frame_demo_is_flagged_by_modifies_check() {
    // The frame-demo contract is built in; write it out for the CLI.
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("frame.mli.spec");
    std::fs::write(&spec, speclite::corpus::FRAME_DEMO_SPEC).unwrap();
    let out = run(&[
        "test",
        spec.to_str().unwrap(),
        "--impl",
        "frame_demo",
        "--count",
        "100",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(
        report["test"]["shrunk"]["verdict"]["verdict"],
        "modifies-violation"
    );
}

#[test]
fn mismatched_impl_and_spec_fail_before_running() {
    let spec = specs_dir().join("hashtbl_full.mli.spec");
    let out = run(&["test", spec.to_str().unwrap(), "--impl", "queue_two_list"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no operation"), "{err}");
}

#[test]
fn forget_mark_mutant_exhausts_the_step_budget() {
    // A cycle among unmarked vertices with an unreachable target makes the
    // mark-forgetting search loop until its budget trips.
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("loop.graph");
    std::fs::write(
        &graph,
        "vertices: a b c d\nedge: a b\nedge: b c\nedge: c b\n",
    )
    .unwrap();
    let out = run(&[
        "path",
        graph.to_str().unwrap(),
        "--from",
        "a",
        "--to",
        "d",
        "--impl",
        "mutant_G1",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_valid(&report);
    assert_eq!(report["path"]["failure"]["kind"], "budget-exceeded");
    assert_eq!(report["path"]["oracle"], false);
}
