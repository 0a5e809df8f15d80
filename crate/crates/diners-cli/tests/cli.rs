//! End-to-end tests of the `diners` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use diners::distributed::NeighbourOrder;
use diners::executor::{run_polled, Architecture};
use diners::graph::ConflictGraph;
use diners::philosopher::Activity;
use diners::stream::StreamSpec;
use diners::trace::{parse_ndjson, trace_to_ndjson};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diners"))
}

fn run_cli(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_file(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

const RING5: &str = "n 5\n1 2\n2 3\n3 4\n4 5\n5 1\n";

#[test]
fn run_writes_one_record_per_step_and_passes_inline_checks() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "ring.txt", RING5);
    let out = dir.path().join("trace.ndjson");
    let output = run_cli(&[
        "run",
        "--graph",
        &graph,
        "--horizon",
        "100",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 100);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("eat counts:"), "{stderr}");
    assert!(stderr.contains("max hungry wait:"), "{stderr}");
}

#[test]
fn run_trace_reparses_field_for_field() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = write_file(dir.path(), "ring.txt", RING5);
    let out = dir.path().join("trace.ndjson");
    let output = run_cli(&[
        "run",
        "--graph",
        &graph_path,
        "--mode",
        "distributed",
        "--horizon",
        "50",
        "--seed",
        "7",
        "--order",
        "shuffle:3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let graph = ConflictGraph::ring(5).unwrap();
    let order = NeighbourOrder::shuffled(&graph, 3);
    let spec = StreamSpec::BoundedEating {
        seed: 7,
        max_eat: 3,
        p_switch: 0.5,
    };
    let expected = run_polled(&graph, &order, Architecture::Distributed, &spec, 50).unwrap();
    let parsed = parse_ndjson(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(parsed.records, expected.records);
    assert_eq!(parsed.order.as_ref(), expected.order.as_ref());
    // Byte-level determinism as well.
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        trace_to_ndjson(&expected).unwrap()
    );
}

#[test]
fn scripted_single_diner_matches_the_golden_table() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "one.txt", "n 1\n");
    let script = write_file(dir.path(), "script.txt", "1\n0\n0\n0\n1\n");
    let output = run_cli(&[
        "run",
        "--graph",
        &graph,
        "--dynamics",
        "clocked",
        "--script",
        &script,
        "--horizon",
        "11",
    ]);
    assert!(output.status.success(), "{output:?}");
    let golden = include_str!("data/paced_one_diner.ndjson");
    assert_eq!(String::from_utf8_lossy(&output.stdout), golden);
}

#[test]
fn self_loop_graph_is_rejected_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "bad.txt", "n 3\n1 1\n");
    let output = run_cli(&["run", "--graph", &graph, "--horizon", "5"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(stderr.contains("irreflexive"), "{stderr}");
}

#[test]
fn zero_horizon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "ring.txt", RING5);
    let output = run_cli(&["run", "--graph", &graph, "--horizon", "0"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn check_accepts_clean_traces_and_rejects_corrupt_ones() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ConflictGraph::ring(5).unwrap();
    let order = NeighbourOrder::ascending(&graph);
    let spec = StreamSpec::BoundedEating {
        seed: 9,
        max_eat: 3,
        p_switch: 0.5,
    };
    let mut trace = run_polled(&graph, &order, Architecture::Centralized, &spec, 200).unwrap();
    let clean = write_file(dir.path(), "clean.ndjson", &trace_to_ndjson(&trace).unwrap());
    let output = run_cli(&["check", "--trace", &clean, "--max-eat", "3"]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("safety"), "{stdout}");
    assert!(stdout.contains("starvation-freedom"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");

    // Corrupt one step: force a neighbour of an eater to eat too.
    let step = trace
        .records
        .iter()
        .position(|r| {
            r.activities
                .iter()
                .any(|(_, a)| *a == Activity::Eating)
        })
        .expect("someone eats within 200 steps");
    let eater = trace.records[step]
        .activities
        .iter()
        .find(|(_, a)| **a == Activity::Eating)
        .map(|(j, _)| j)
        .unwrap();
    let neighbour = eater % 5 + 1;
    diners::invariants::corrupt_activity(&mut trace.records[step], neighbour, Activity::Eating);
    let corrupt = write_file(
        dir.path(),
        "corrupt.ndjson",
        &trace_to_ndjson(&trace).unwrap(),
    );
    let output = run_cli(&["check", "--trace", &corrupt]);
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("safety"), "{stdout}");
    assert!(stdout.contains(&format!("step {step}")), "{stdout}");
}

#[test]
fn compare_verifies_the_two_architectures() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "ring.txt", RING5);
    let output = run_cli(&[
        "compare",
        "--graph",
        &graph,
        "--horizon",
        "500",
        "--seed",
        "11",
        "--order",
        "shuffle:2",
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("distributed-equivalence"), "{stdout}");
    assert!(stdout.contains("pass"), "{stdout}");
}

#[test]
fn check_can_rerun_a_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "ring.txt", RING5);
    let config = write_file(
        dir.path(),
        "config.json",
        &format!(
            r#"{{"graph": "{graph}", "horizon": 40, "seed": 5, "mode": "distributed"}}"#
        ),
    );
    // The explicit flag beats the config's horizon.
    let output = run_cli(&["check", "--run-config", &config]);
    // Unknown flag: keep the interface honest.
    assert!(!output.status.success());
    let output = run_cli(&["check", "--config", &config, "--horizon", "60"]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("no-eating-pair-updates"), "{stdout}");
}

#[test]
fn behaviours_reports_model_equality() {
    let output = run_cli(&["behaviours", "--system", "both", "--horizon", "5"]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("equal"), "{stdout}");
    assert!(stdout.lines().any(|l| l == "ttttt"), "{stdout}");

    let q = run_cli(&["behaviours", "--system", "q", "--horizon", "3"]);
    let stdout = String::from_utf8_lossy(&q.stdout);
    let mut lines: Vec<&str> = stdout.lines().collect();
    lines.sort_unstable();
    assert_eq!(lines, vec!["the", "thh", "tth", "ttt"]);
}

#[test]
fn csv_export_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_file(dir.path(), "ring.txt", RING5);
    let csv = dir.path().join("trace.csv");
    let out = dir.path().join("trace.ndjson");
    let output = run_cli(&[
        "run",
        "--graph",
        &graph,
        "--horizon",
        "10",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("step,vertex,activity,choice,command,is_top"));
    assert_eq!(text.lines().count(), 1 + 10 * 5);
}
