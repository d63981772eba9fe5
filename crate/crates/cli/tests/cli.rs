//! End-to-end checks of the `mgg` binary: every subcommand, the documented
//! exit codes, and the fixture outputs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn mgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn apply_derives_the_expected_graph() {
    let out = mgg(&["apply", &fixture("startprocess.prod"), &fixture("factory.graph")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        stdout(&out),
        "node c1 Conveyor\nnode m1 Machine\nnode o1 Operator\n\
         edge c1 m1\nedge m1 m1\nedge o1 m1\nedge o1 o1\n"
    );
}

#[test]
fn apply_lists_matches() {
    let out = mgg(&[
        "apply",
        &fixture("startprocess.prod"),
        &fixture("factory.graph"),
        "--list",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("piece:k1"));
}

#[test]
fn apply_without_match_is_negative() {
    let out = mgg(&[
        "apply",
        &fixture("startprocess.prod"),
        &fixture("idle_factory.graph"),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).is_empty(), "no partial output");
}

#[test]
fn apply_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("derived.graph");
    let out = mgg(&[
        "apply",
        &fixture("startprocess.prod"),
        &fixture("factory.graph"),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.contains("edge m1 m1"));
}

#[test]
fn run_grammar_until_halt() {
    let out = mgg(&["run", &fixture("eraser.grammar")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // Two applications, then a final edgeless graph.
    assert!(text.contains("1 consume"));
    assert!(text.contains("2 consume"));
    assert!(!text.contains("3 consume"));
    let final_part = text.split("final:\n").nth(1).unwrap();
    assert_eq!(final_part, "node x T\nnode y T\nnode z T\n");
}

#[test]
fn run_budget_exhaustion_is_exit_4() {
    let out = mgg(&["run", &fixture("eraser.grammar"), "--max-steps", "1"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn analyze_single_step_sequence() {
    let out = mgg(&["analyze", &fixture("single.seq")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("verdict=deterministic witnesses=1"));
    // Minimal initial digraph is the production's left hand side.
    assert!(text.contains("initial-digraph-minimal:\nnode u A\nnode v B\nedge u v\n"));
}

#[test]
fn analyze_double_addition_names_the_conflict() {
    let out = mgg(&["analyze", &fixture("double_add.seq")]);
    assert_eq!(code(&out), 3);
    let text = stdout(&out);
    let negative = text
        .split("coherence-negative:\n")
        .nth(1)
        .unwrap()
        .split("coherence-gf2")
        .next()
        .unwrap();
    assert!(negative.contains("edge u v"), "conflicting edge named: {negative}");
    assert!(text.contains("initial-digraph: skipped"));
}

#[test]
fn analyze_same_label_counts_witnesses() {
    let out = mgg(&["analyze", &fixture("same_label.seq")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("verdict=non-deterministic witnesses=2"));
}

#[test]
fn analyze_budget_is_exit_4() {
    let out = mgg(&["analyze", &fixture("same_label.seq"), "--budget", "1"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn tm_copy_subroutine() {
    let out = mgg(&[
        "tm",
        &fixture("copy.tm"),
        "0110",
        "--head",
        "2",
        "--state",
        "1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("110110"));
    // 15 state-table firings plus two left extensions.
    assert_eq!(lines.count(), 17);
}

#[test]
fn tm_longer_tape() {
    let out = mgg(&[
        "tm",
        &fixture("copy.tm"),
        "0000110",
        "--head",
        "5",
        "--state",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().next(), Some("0110110"));
}

#[test]
fn bc_truth_table() {
    // (x and y) or (not x)
    let cases = [("0", "0", "1"), ("0", "1", "1"), ("1", "0", "0"), ("1", "1", "1")];
    for (x, y, want) in cases {
        let out = mgg(&[
            "bc",
            &fixture("mixed.bc"),
            &format!("x={x}"),
            &format!("y={y}"),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout(&out).trim(), want, "x={x} y={y}");
    }
}

#[test]
fn bc_missing_assignment_is_usage() {
    let out = mgg(&["bc", &fixture("mixed.bc"), "x=1"]);
    assert_eq!(code(&out), 2, "missing input surfaces from compilation");
}

#[test]
fn count_exact_values() {
    let out = mgg(&["count", "productions", "1"]);
    assert_eq!(stdout(&out).trim(), "3");
    let out = mgg(&["count", "swaps", "2"]);
    assert_eq!(stdout(&out).trim(), "16");
    let out = mgg(&["count", "productions", "3"]);
    assert_eq!(stdout(&out).trim(), "19683");
}

#[test]
fn parse_errors_are_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.graph");
    std::fs::write(&path, "node a T\nedge a missing\n").unwrap();
    let out = mgg(&["apply", &fixture("startprocess.prod"), path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2:6"), "line and column reported: {err}");
}

#[test]
fn usage_errors_are_exit_1() {
    let out = mgg(&["frobnicate"]);
    assert_eq!(code(&out), 1);
    let out = mgg(&["count", "gizmos", "1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn seeded_runs_are_reproducible() {
    let args = [
        "run",
        &fixture("eraser.grammar"),
        "--strategy",
        "random",
        "--seed",
        "9",
    ];
    let a = mgg(&args);
    let b = mgg(&args);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(code(&a), 0);
}
