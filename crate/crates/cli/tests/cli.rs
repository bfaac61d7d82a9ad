use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_auction-lab"));
    cmd.env_remove("AUCTION_LAB_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

const DISJOINT_X: &str = "101000000000";
const DISJOINT_Y: &str = "010100000000";
const MEETING_X: &str = "001000000000";
const MEETING_Y: &str = "001100000000";

fn gen_instance(dir: &Path, name: &str, x: &str, y: &str) -> std::path::PathBuf {
    let file = dir.join(name);
    let out = run(&["gen", "--x", x, "--y", y, "--out", path(&file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    file
}

#[test]
fn gen_flow_certify_round_trip_on_disjoint_input() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "inst.json", DISJOINT_X, DISJOINT_Y);
    let flow = dir.path().join("flow.json");
    let csv = dir.path().join("virtuals.csv");
    let out = run(&[
        "flow",
        "--instance",
        path(&inst),
        "--out",
        path(&flow),
        "--csv",
        path(&csv),
    ]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 1);

    let out = run(&["certify", "--instance", path(&inst), "--flow", path(&flow), "--mechanism", "spa1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    let out = run(&["virtuals", "--instance", path(&inst), "--flow", path(&flow)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), std::fs::read_to_string(&csv).unwrap());
}

#[test]
fn careful_auction_certifies_under_modified_flow() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "inst.json", MEETING_X, MEETING_Y);
    let flow = dir.path().join("flow.json");
    let out = run(&["flow", "--instance", path(&inst), "--kind", "modified", "--out", path(&flow)]);
    assert_eq!(code(&out), 0);
    let out = run(&["certify", "--instance", path(&inst), "--flow", path(&flow), "--mechanism", "careful"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn failed_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "inst.json", MEETING_X, MEETING_Y);
    let flow = dir.path().join("flow.json");
    assert_eq!(code(&run(&["flow", "--instance", path(&inst), "--out", path(&flow)])), 0);
    let out = run(&["certify", "--instance", path(&inst), "--flow", path(&flow), "--mechanism", "spa1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(code(&run(&["disj", "--x", "1a", "--y", "01"])), 2);
    assert_eq!(code(&run(&["disj", "--x", "10", "--y", "011"])), 2);
    assert_eq!(code(&run(&["gen", "--x", "10"])), 2);
    assert_eq!(code(&run(&["verify", "--n", "8", "--check", "no-such-check"])), 2);
    assert_eq!(code(&run(&["verify", "--n", "8", "--trials", "0"])), 2);
    assert_eq!(code(&run(&["flow", "--instance", "/nonexistent/instance.json"])), 2);
}

#[test]
fn disj_answers_small_inputs() {
    let out = run(&["disj", "--x", "10", "--y", "01"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().next(), Some("yes"));
    let text = stdout(&out);
    let doc: serde_json::Value = serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
    assert_eq!(doc["n"], 12);
    assert_eq!(doc["oracle"], true);
    let out = run(&["disj", "--x", "11", "--y", "01"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().next(), Some("no"));
}

#[test]
fn disj_reports_certificate_at_larger_sizes() {
    for (x, y, expected) in [(DISJOINT_X, DISJOINT_Y, "yes"), (MEETING_X, MEETING_Y, "no")] {
        let out = run(&["disj", "--x", x, "--y", y]);
        assert_eq!(code(&out), 0);
        let text = stdout(&out);
        let (answer, doc) = text.split_once('\n').unwrap();
        assert_eq!(answer, expected);
        let doc: serde_json::Value = serde_json::from_str(doc).unwrap();
        assert_eq!(doc["disjoint"], doc["oracle"]);
        assert_ne!(doc["certificate"], "lp");
    }
}

#[test]
fn seeded_commands_are_deterministic() {
    let a = run(&["gen", "--n", "12", "--seed", "5"]);
    let b = run(&["gen", "--n", "12", "--seed", "5"]);
    let c = run(&["gen", "--n", "12", "--seed", "6"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);

    let p = run(&["protocol", "--mode", "single-dim", "--n", "8", "--seed", "3"]);
    let q = run(&["protocol", "--mode", "single-dim", "--n", "8", "--seed", "3"]);
    assert_eq!(code(&p), 0);
    assert_eq!(p.stdout, q.stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let explicit = run(&["gen", "--n", "12", "--seed", "9"]);
    let from_env = bin()
        .args(["gen", "--n", "12"])
        .env("AUCTION_LAB_SEED", "9")
        .output()
        .unwrap();
    let default = run(&["gen", "--n", "12"]);
    assert_eq!(explicit.stdout, from_env.stdout);
    assert_ne!(explicit.stdout, default.stdout);
    assert_eq!(default.stdout, run(&["gen", "--n", "12", "--seed", "0"]).stdout);
}

#[test]
fn verify_with_check_subsets() {
    let out = run(&[
        "verify",
        "--n",
        "12",
        "--trials",
        "2",
        "--check",
        "canonical-positive",
        "--check",
        "modified-valid",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 2);
    assert!(!text.contains(" FAIL "));

    let out = run(&["verify", "--n", "16", "--trials", "1", "--check", "zd-decreasing"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL zd-decreasing"));
}

#[test]
fn protocol_modes_emit_transcripts() {
    let out = run(&["protocol", "--mode", "single-dim", "--n", "16", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc.is_object());

    let out = run(&[
        "protocol", "--mode", "full", "--n", "12", "--x", DISJOINT_X, "--y", DISJOINT_Y,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let full: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(full.is_object());

    assert_eq!(code(&run(&["protocol", "--mode", "single-dim", "--n", "0"])), 2);
}

#[test]
fn iron_reads_distribution_file() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("dist.json");
    std::fs::write(&dist, r#"{"values":[1,2,3],"probs":["1/2","1/4","1/4"]}"#).unwrap();
    let out = run(&["iron", "--dist", path(&dist)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().count() >= 4);
}
