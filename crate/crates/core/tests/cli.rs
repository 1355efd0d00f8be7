//! End-to-end tests of the command-line binary: output shapes, exit codes,
//! determinism, and the file-based input formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fpproc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpproc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fpproc-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

#[test]
fn group_info_reports_the_square_symmetries() {
    let out = fpproc(&["group", "info", "--family", "dihedral:4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("degree: 4"));
    assert!(text.contains("order: 8"));
    assert!(text.contains("orbits: {1 2 3 4}"));
    assert!(text.contains("primitive: false"));
}

#[test]
fn find_pairs_on_even_and_odd_dihedral_groups() {
    let out = fpproc(&["group", "find-pairs", "--family", "dihedral:4", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("pairs: 2"));
    assert!(text.contains("orbits {1 3} {2 4}"));

    let out = fpproc(&["group", "find-pairs", "--family", "dihedral:3", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0), "empty result is not a failure");
    assert!(stdout(&out).contains("pairs: 0"));
}

#[test]
fn pattern_build_summarizes_the_construction() {
    let out = fpproc(&[
        "pattern",
        "build",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
        "--p",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("elements: 2048"));
    assert!(text.contains("root_group_order: 8"));
    assert!(text.contains("fiber_size: 256 (uniform)"));
}

#[test]
fn pattern_verify_passes_for_theorem12_and_fails_for_intransitive_wreath() {
    let out = fpproc(&[
        "pattern",
        "verify",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict: pass"));

    // A wreath over an intransitive group verifies as a group but fails the
    // transitivity verdict, which is a verification failure (exit 1).
    let dir = scratch_dir("verify");
    let group_file = dir.join("flip.group");
    std::fs::write(&group_file, "degree: 3\ngenerators: (1 2)\n").unwrap();
    let out = fpproc(&[
        "pattern",
        "verify",
        "--group-file",
        group_file.to_str().unwrap(),
        "--pattern",
        "wreath",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("root_transitive: fail"));
    assert!(text.contains("verdict: fail"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn process_outputs_exact_rationals() {
    let out = fpproc(&[
        "process",
        "dist",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
        "--level",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("4 0: 1/2048"));
    assert!(text.contains("expectation_level_2: 1"));
    assert!(text.contains("fpp_level_2: 255/2048"));

    let out = fpproc(&[
        "process",
        "martingale",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "a non-martingale verdict is a result"
    );
    let text = stdout(&out);
    assert!(text.contains("criterion_verdict: non-martingale"));
    assert!(text.contains("failing_level: 2"));
    assert!(text.contains("witness_vertex: 1"));
    assert!(text.contains("deviation_level_2: 4"));

    let out = fpproc(&[
        "process",
        "fpp",
        "--family",
        "dihedral:4",
        "--pattern",
        "wreath",
        "--level",
        "2",
    ]);
    let text = stdout(&out);
    assert!(text.contains("fpp_level_1: 3/8"));

    let out = fpproc(&[
        "process",
        "afplp",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
        "--level",
        "2",
    ]);
    let text = stdout(&out);
    assert!(text.contains("holds: false"));
    assert!(text.contains("worst_witness_lift_average: 8"));
}

#[test]
fn sampling_is_reproducible_and_cross_checked() {
    let args = [
        "sample",
        "fpp",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
        "--level",
        "2",
        "--trials",
        "20000",
        "--seed",
        "7",
    ];
    let first = fpproc(&args);
    let second = fpproc(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(
        stdout(&first),
        stdout(&second),
        "same seed must give identical bytes"
    );
    let text = stdout(&first);
    assert!(text.contains("exact: 255/2048"));
    assert!(text.contains("seed: 7"));

    let third = fpproc(&[
        "sample",
        "fpp",
        "--family",
        "dihedral:4",
        "--pattern",
        "theorem12",
        "--level",
        "2",
        "--trials",
        "20000",
        "--seed",
        "8",
    ]);
    assert_ne!(
        stdout(&first),
        stdout(&third),
        "different seeds should differ"
    );
}

#[test]
fn group_and_pattern_files_round_trip() {
    let dir = scratch_dir("files");
    let group_file = dir.join("square.group");
    std::fs::write(
        &group_file,
        "# the square\ndegree: 4\ngenerators: (1 2 3 4), (2 4)\n",
    )
    .unwrap();
    let pattern_file = dir.join("square.pattern");
    std::fs::write(
        &pattern_file,
        "group: square.group\nfamily: theorem12\np: 2\nsigma: (2 4) => (1 2 3 4)\n",
    )
    .unwrap();

    let out = fpproc(&[
        "group",
        "info",
        "--group-file",
        group_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("order: 8"));

    let out = fpproc(&[
        "pattern",
        "build",
        "--pattern-file",
        pattern_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("elements: 2048"));
    assert!(text.contains("sigma: (2 4) => (1 2 3 4)"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn machine_readable_mode_emits_json() {
    let out = fpproc(&[
        "process",
        "martingale",
        "--family",
        "dihedral:4",
        "--pattern",
        "wreath",
        "--machine-readable",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with('{') && text.trim_end().ends_with('}'));
    assert!(text.contains("\"criterion_verdict\":\"martingale\""));
}

#[test]
fn usage_errors_exit_two() {
    let out = fpproc(&["process", "dist", "--family", "dihedral:4"]);
    assert_eq!(out.status.code(), Some(2), "--pattern is required");

    let out = fpproc(&["nonsense"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fpproc(&["group", "info", "--family", "dihedral:2:3:4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_paper_passes_end_to_end() {
    let out = fpproc(&["verify-paper"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "battery failed:\n{text}");
    assert!(text.contains("verdict: pass"));
    assert_eq!(text.matches("PASS ").count(), 10);
    assert_eq!(text.matches("FAIL ").count(), 0);
}
