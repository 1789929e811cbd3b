//! End-to-end tests of the `rescuemesh` binary: output files, exit codes,
//! determinism of the written artifacts, and the compare subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rescuemesh_core::log;
use rescuemesh_core::report::MetricsReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rescuemesh"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn tmp(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(sub)
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "stdout={} stderr={}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_writes_parsable_log_and_metrics() {
    let dir = tmp("run-six");
    let sc = scenario("six-node-group.toml");
    let out = run_ok(&[sc.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);

    let log_text = std::fs::read_to_string(dir.join("events.jsonl")).unwrap();
    let records = log::parse_jsonl(&log_text).unwrap();
    assert!(!records.is_empty());

    let metrics_text = std::fs::read_to_string(dir.join("metrics.json")).unwrap();
    let m = MetricsReport::from_json(&metrics_text).unwrap();
    assert_eq!(m.scenario, "six-node-group");
    let rescue = m.rescue.as_ref().unwrap();
    let w = rescue.groups[0].wakeups_per_hyperperiod.as_ref().unwrap();
    assert_eq!((w.clique, w.always_awake), (22, 72));
    assert_eq!(w.mis_rotation, "27");
    assert!((w.savings_vs_always - 50.0 / 72.0).abs() < 1e-12);

    // The one-screen summary quotes the comparison.
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("wake-ups 22 vs mis 27 vs always 72"), "{stdout}");
}

#[test]
fn reruns_write_byte_identical_logs() {
    let sc = scenario("passerby-pickup.toml");
    let (d1, d2) = (tmp("rerun-1"), tmp("rerun-2"));
    run_ok(&[sc.to_str().unwrap(), "--out-dir", d1.to_str().unwrap()]);
    run_ok(&[sc.to_str().unwrap(), "--out-dir", d2.to_str().unwrap()]);
    let a = std::fs::read(d1.join("events.jsonl")).unwrap();
    let b = std::fs::read(d2.join("events.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes_distinguish_usage_schema_and_kernel_errors() {
    let sc = scenario("six-node-group.toml");

    // Usage: missing scenario, unknown policy value.
    let no_args = bin().output().unwrap();
    assert_eq!(no_args.status.code(), Some(1));
    let bad_policy = bin()
        .args([sc.to_str().unwrap(), "--routing-policy", "zigzag"])
        .output()
        .unwrap();
    assert_eq!(bad_policy.status.code(), Some(1));

    // Schema: unreadable path, file that is not a scenario.
    let missing = bin().arg("no-such-scenario.toml").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let junk = tmp("junk.toml");
    std::fs::write(&junk, "this is not = [valid").unwrap();
    let unparsable = bin().arg(&junk).output().unwrap();
    assert_eq!(unparsable.status.code(), Some(2));

    // Kernel: a horizon override the wake grid cannot satisfy.
    let dir = tmp("kernel-err");
    let kernel = bin()
        .args([
            sc.to_str().unwrap(),
            "--horizon",
            "63 s",
            "--out-dir",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(kernel.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&kernel.stderr);
    assert!(stderr.contains("not a multiple"), "{stderr}");
}

#[test]
fn compare_reports_identical_runs_as_zero_diff() {
    let sc = scenario("six-node-group.toml");
    let (d1, d2, d3) = (tmp("cmp-1"), tmp("cmp-2"), tmp("cmp-3"));
    run_ok(&[sc.to_str().unwrap(), "--out-dir", d1.to_str().unwrap()]);
    run_ok(&[sc.to_str().unwrap(), "--out-dir", d2.to_str().unwrap()]);
    run_ok(&[
        sc.to_str().unwrap(),
        "--seed",
        "8",
        "--out-dir",
        d3.to_str().unwrap(),
    ]);

    let same = run_ok(&[
        "compare",
        d1.join("metrics.json").to_str().unwrap(),
        d2.join("metrics.json").to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&same.stdout);
    assert!(stdout.contains("identical: 0 differing metrics"), "{stdout}");

    // A seed change shows up only in the seed leaf: every protocol outcome
    // of this scenario is seed-independent.
    let diff = run_ok(&[
        "compare",
        d1.join("metrics.json").to_str().unwrap(),
        d3.join("metrics.json").to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&diff.stdout);
    assert!(stdout.contains("$.seed: 7 != 8"), "{stdout}");
    assert!(stdout.contains("1 differing metrics"), "{stdout}");

    // Unreadable reports are a schema error.
    let bad = bin()
        .args(["compare", "nope.json", "also-nope.json"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn metrics_only_skips_the_event_log() {
    let dir = tmp("metrics-only");
    let sc = scenario("mailbox.toml");
    run_ok(&[
        sc.to_str().unwrap(),
        "--metrics-only",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(dir.join("metrics.json").exists());
    assert!(!dir.join("events.jsonl").exists());
}
