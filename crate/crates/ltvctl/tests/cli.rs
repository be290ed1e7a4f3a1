//! End-to-end runs of the `ltvctl` binary: file round trips, subcommand
//! wiring, exit codes, and reproducibility of outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ltvctl")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const CANONICAL_2X2: &str = r#"{
    "n": 2, "k_min": 0, "k_max": 0, "extension": {"periodic": 1},
    "steps": [
        {"k": 0, "A": [["0", "1"], ["3", "2"]], "b": ["0", "1"], "c": ["1", "2"]}
    ]
}"#;

const ROTATION: &str = r#"{"n": 2, "A": [["0","1"],["-1","0"]], "b": ["0","1"], "c": ["1","0"]}"#;

#[test]
fn canon_on_a_canonical_file_emits_identity_transforms() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.json", CANONICAL_2X2);
    let out_sys = dir.path().join("canon.json");
    let out_t = dir.path().join("t.json");
    let output = run(&[
        "canon",
        "--system",
        sys.to_str().unwrap(),
        "--range",
        "0:3",
        "--out-system",
        out_sys.to_str().unwrap(),
        "--out-transform",
        out_t.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let transform: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_t).unwrap()).unwrap();
    for entry in transform["T"].as_array().unwrap() {
        assert_eq!(entry["matrix"][0][0], "1");
        assert_eq!(entry["matrix"][0][1], "0");
        assert_eq!(entry["matrix"][1][0], "0");
        assert_eq!(entry["matrix"][1][1], "1");
    }

    // The emitted canonical system file loads back and round-trips.
    let text = std::fs::read_to_string(&out_sys).unwrap();
    let reparsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(reparsed["n"], 2);
}

#[test]
fn nullify_all_reports_a_zero_product_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.json", CANONICAL_2X2);
    let args = [
        "nullify",
        "--system",
        sys.to_str().unwrap(),
        "--time",
        "0",
        "--all",
        "--seed",
        "7",
    ];
    let first = run(&args);
    assert!(first.status.success(), "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let text = String::from_utf8_lossy(&first.stdout);
    assert!(
        text.contains("max |entry| = 0"),
        "expected an exact zero product line, got: {text}"
    );
    assert!(text.contains("28 fixed start"), "bounds line missing: {text}");

    // Byte-identical output on a rerun with the same configuration.
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn nullify_single_state_writes_schedule_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.json", CANONICAL_2X2);
    let csv = dir.path().join("traj.csv");
    let sched = dir.path().join("schedule.json");
    let output = run(&[
        "nullify",
        "--system",
        sys.to_str().unwrap(),
        "--time",
        "0",
        "--state",
        "1,0",
        "--out",
        csv.to_str().unwrap(),
        "--schedule",
        sched.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = csv_text.lines();
    assert_eq!(lines.next().unwrap(), "k,x1,x2,y,F");
    let last = csv_text.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[1], "0");
    assert_eq!(fields[2], "0");

    // The schedule file replays through the simulate subcommand to the
    // same terminal state.
    let sim = run(&[
        "simulate",
        "--system",
        sys.to_str().unwrap(),
        "--time",
        "0",
        "--state",
        "1,0",
        "--feedback",
        sched.to_str().unwrap(),
    ]);
    assert!(sim.status.success());
    let sim_text = String::from_utf8_lossy(&sim.stdout);
    assert_eq!(sim_text.trim_end().lines().last(), csv_text.trim_end().lines().last());
}

#[test]
fn simulate_open_loop_prints_the_doubling_recursion() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(
        dir.path(),
        "sys.json",
        r#"{
            "n": 1, "k_min": 0, "k_max": 0, "extension": {"periodic": 1},
            "steps": [ {"k": 0, "A": [["2"]], "b": ["1"], "c": ["1"]} ]
        }"#,
    );
    let output = run(&[
        "simulate",
        "--system",
        sys.to_str().unwrap(),
        "--time",
        "0",
        "--state",
        "1",
        "--steps",
        "3",
    ]);
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    let states: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(states, vec!["1", "2", "4", "8"]);
}

#[test]
fn discretize_and_sweep_flag_the_singular_period() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "rotation.json", ROTATION);
    let out = dir.path().join("sampled.json");
    let output = run(&[
        "discretize",
        "--system",
        sys.to_str().unwrap(),
        "--delta",
        "1.5707963267948966",
        "--k-range",
        "0:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    // The emitted discrete file loads under float mode via simulate.
    let sim = run(&[
        "simulate",
        "--system",
        out.to_str().unwrap(),
        "--time",
        "0",
        "--state",
        "1,0",
        "--steps",
        "1",
        "--mode",
        "float",
    ]);
    assert!(sim.status.success(), "stderr: {}", String::from_utf8_lossy(&sim.stderr));

    let csv = dir.path().join("sweep.csv");
    let sweep = run(&[
        "sweep",
        "--system",
        sys.to_str().unwrap(),
        "--delta-min",
        "0.7853981633974483",
        "--delta-max",
        "3.141592653589793",
        "--delta-steps",
        "4",
        "--k-range",
        "0:1",
        "--zero-tol",
        "1e-6",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(sweep.status.success(), "stderr: {}", String::from_utf8_lossy(&sweep.stderr));
    let rows = std::fs::read_to_string(&csv).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next().unwrap(), "delta,k,min_sv,decoupling,verdict");
    let verdicts: Vec<&str> = rows.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(verdicts, vec!["true", "true", "true", "false"]);
}

#[test]
fn check_subcommand_passes() {
    let output = run(&["check", "--seed", "0"]);
    assert!(
        output.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    let text = String::from_utf8_lossy(&output.stdout);
    assert_eq!(text.matches(": PASS").count(), 4);
}

#[test]
fn exit_codes_follow_the_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    // Validation failure: broken file.
    let bad = write(dir.path(), "bad.json", r#"{"n": 1}"#);
    let output = run(&[
        "simulate",
        "--system",
        bad.to_str().unwrap(),
        "--time",
        "0",
        "--state",
        "1",
        "--steps",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(1));

    // Algorithm failure: nullification with a vanishing decoupling term.
    let degenerate = write(
        dir.path(),
        "degenerate.json",
        r#"{
            "n": 2, "k_min": 0, "k_max": 0, "extension": {"periodic": 1},
            "steps": [
                {"k": 0, "A": [["0", "1"], ["3", "2"]], "b": ["0", "1"], "c": ["0", "1"]}
            ]
        }"#,
    );
    let output = run(&[
        "nullify",
        "--system",
        degenerate.to_str().unwrap(),
        "--time",
        "0",
        "--state",
        "1,0",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("validate"), "stage attribution missing: {stderr}");
}
