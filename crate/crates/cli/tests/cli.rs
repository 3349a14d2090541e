//! The binary end to end: exit codes, outputs and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn safecross(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safecross"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&safecross(&["--help"])), 0);
    assert_eq!(code(&safecross(&["--version"])), 0);
    assert_eq!(code(&safecross(&[])), 1);
    assert_eq!(code(&safecross(&["fly"])), 1);
    assert_eq!(code(&safecross(&["run", "--policy", "sideways", "--out", "x"])), 1);
    assert_eq!(code(&safecross(&["export", "--out", "x"])), 1);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // learned policy without a checkpoint
    let r = safecross(&["run", "--out", s(&out)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("checkpoint"));
    // checkpoint that does not exist
    let missing = dir.path().join("none.json");
    assert_eq!(code(&safecross(&["evaluate", "--checkpoint", s(&missing), "--out", s(&out)])), 1);
    // malformed checkpoint
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{}").unwrap();
    assert_eq!(code(&safecross(&["evaluate", "--checkpoint", s(&junk), "--out", s(&out)])), 1);
    // config with an unknown key and one with an invalid value
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[episode]\nwarp = 9\n").unwrap();
    assert_eq!(code(&safecross(&["run", "--policy", "speed-limit", "--config", s(&cfg), "--out", s(&out)])), 1);
    std::fs::write(&cfg, "[episode]\ntimeout = -1.0\n").unwrap();
    assert_eq!(code(&safecross(&["run", "--policy", "speed-limit", "--config", s(&cfg), "--out", s(&out)])), 1);
    assert_eq!(code(&safecross(&["run", "--policy", "speed-limit", "--config", s(&missing), "--out", s(&out)])), 1);
    assert_eq!(code(&safecross(&["run", "--policy", "speed-limit", "--delay", "-2", "--out", s(&out)])), 1);
}

#[test]
fn unwritable_output_is_a_runtime_abort() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    // a directory cannot be created under a regular file
    let out = file.join("sub");
    assert_eq!(code(&safecross(&["run", "--policy", "speed-limit", "--out", s(&out)])), 2);
}

#[test]
fn run_writes_trace_and_summary_and_export_cuts_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let r = safecross(&["run", "--policy", "speed-limit", "--delay", "0", "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["regime"], "yield");
    assert!(summary["adas_activations"].as_u64().unwrap() > 0);

    let panels = dir.path().join("panels");
    let trace = out.join("trace.csv");
    assert_eq!(code(&safecross(&["export", "--trace", s(&trace), "--out", s(&panels)])), 0);
    for f in ["controls.csv", "speeds.csv", "accelerations.csv", "switching.csv"] {
        assert!(panels.join(f).is_file(), "{f}");
    }
}

#[test]
fn shield_off_lets_the_speed_limit_driver_crash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ev");
    let r = safecross(&["evaluate", "--policy", "speed-limit", "--shield", "off", "--seed", "0", "--out", s(&out)]);
    assert_eq!(code(&r), 0);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["collisions"].as_u64().unwrap() > 0);
    assert_eq!(report["adas_episodes"], 0);
}

#[test]
fn short_training_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        let r = safecross(&["train", "--steps", "1024", "--seed", "3", "--out", s(o)]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["checkpoint.json", "metrics.csv", "episodes.csv", "config.toml"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // the checkpoint drives evaluate and run
    let ck = a.join("checkpoint.json");
    let ev = dir.path().join("ev");
    assert_eq!(code(&safecross(&["evaluate", "--checkpoint", s(&ck), "--out", s(&ev)])), 0);
    assert!(ev.join("episodes.csv").is_file());
    let run = dir.path().join("run");
    assert_eq!(code(&safecross(&["run", "--checkpoint", s(&ck), "--delay", "2.5", "--out", s(&run)])), 0);
    // the saved config reloads
    let cfg = a.join("config.toml");
    assert_eq!(code(&safecross(&["run", "--config", s(&cfg), "--checkpoint", s(&ck), "--out", s(&run)])), 0);
    let panels = dir.path().join("panels");
    assert_eq!(code(&safecross(&["export", "--episodes", s(&a.join("episodes.csv")), "--out", s(&panels)])), 0);
    assert!(panels.join("reward_cumulative.csv").is_file());
}
