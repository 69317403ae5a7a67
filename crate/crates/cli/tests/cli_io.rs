//! End-to-end tests of the `gramest` binary: the generate -> run ->
//! summarize pipeline, the assumption checker, and the exit-code contract
//! (0 ok, 2 config error, 3 every trial failed).

use std::path::PathBuf;
use std::process::{Command, Output};

use gramest_cli::CSV_HEADER;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gramest"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("gramest-cli-test-{}-{name}", std::process::id()));
    p
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn gramest");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// CSV with the wall_ms column blanked, for determinism comparisons.
fn mask_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 13 && fields[11] != "wall_ms" {
                fields[11] = "0";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn generate_run_summarize_pipeline() {
    let scn_path = tmp("scn.json");
    let csv_path = tmp("report.csv");
    let summary_path = tmp("summary.csv");

    run_ok(bin()
        .args(["generate", "--preset", "partial-noise-3x3"])
        .args(["--out", scn_path.to_str().unwrap()]));
    let scn_text = std::fs::read_to_string(&scn_path).unwrap();
    assert!(scn_text.contains("\"clean_prefix\": 1"));

    run_ok(bin()
        .args(["run", "--config", scn_path.to_str().unwrap()])
        .args(["--out", csv_path.to_str().unwrap()])
        .args(["--dims", "200,400", "--trials", "3", "--workers", "2"]));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    // 2 dims x 3 trials x 4 estimators (partial preset enables all four)
    assert_eq!(lines.count(), 24);

    let out = run_ok(bin()
        .args(["summarize", "--in", csv_path.to_str().unwrap()])
        .args(["--csv", summary_path.to_str().unwrap()]));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("partial_noise"));
    let summary = std::fs::read_to_string(&summary_path).unwrap();
    assert!(summary.starts_with("estimator,d,"));

    for p in [scn_path, csv_path, summary_path] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn run_is_deterministic_across_worker_counts() {
    let scn_path = tmp("det-scn.json");
    run_ok(bin()
        .args(["generate", "--preset", "fully-noisy"])
        .args(["--out", scn_path.to_str().unwrap()]));

    let mut outputs = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "3")] {
        let csv_path = tmp(&format!("det-{tag}.csv"));
        run_ok(bin()
            .args(["run", "--config", scn_path.to_str().unwrap()])
            .args(["--out", csv_path.to_str().unwrap()])
            .args(["--dims", "300,600", "--trials", "4", "--workers", workers]));
        outputs.push(std::fs::read_to_string(&csv_path).unwrap());
        let _ = std::fs::remove_file(csv_path);
    }
    assert_eq!(mask_wall_ms(&outputs[0]), mask_wall_ms(&outputs[1]));
    let _ = std::fs::remove_file(scn_path);
}

#[test]
fn check_assumptions_reports_three_statistics() {
    let scn_path = tmp("chk-scn.json");
    run_ok(bin()
        .args(["generate", "--preset", "hetero"])
        .args(["--out", scn_path.to_str().unwrap()]));
    let out = run_ok(bin()
        .args(["check-assumptions", "--config", scn_path.to_str().unwrap()])
        .args(["--d", "2000", "--trials", "5"]));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max |d^-1 ||xi_i||^2 - sigma^2|"));
    assert!(text.contains("max |d^-1 xi_i . xi_j|"));
    assert!(text.contains("max |d^-1 s_i . xi_j|"));
    let _ = std::fs::remove_file(scn_path);
}

#[test]
fn config_errors_exit_with_code_2() {
    // unknown preset
    let out = bin()
        .args(["generate", "--preset", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // missing config file
    let out = bin()
        .args(["run", "--config", "/nonexistent/x.json", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // invalid dims (not ascending)
    let scn_path = tmp("bad-dims.json");
    run_ok(bin()
        .args(["generate", "--preset", "fully-noisy"])
        .args(["--out", scn_path.to_str().unwrap()]));
    let out = bin()
        .args(["run", "--config", scn_path.to_str().unwrap()])
        .args(["--out", "/tmp/never.csv", "--dims", "100,100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_file(scn_path);
}

#[test]
fn all_trials_failing_exits_with_code_3() {
    // sigma^2 large enough that the kernel is indistinguishable from the
    // identity: full_noise hits the debias guard in every trial
    let scn_path = tmp("fail-scn.json");
    let csv_path = tmp("fail.csv");
    run_ok(bin()
        .args(["generate", "--preset", "fully-noisy"])
        .args(["--out", scn_path.to_str().unwrap()]));
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&scn_path).unwrap()).unwrap();
    doc["sigma_bar_sq"] = serde_json::json!(50.0);
    std::fs::write(&scn_path, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = bin()
        .args(["run", "--config", scn_path.to_str().unwrap()])
        .args(["--out", csv_path.to_str().unwrap()])
        .args(["--dims", "2000", "--trials", "2", "--estimators", "full_noise"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // the report is still written, with error codes in place of metrics
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.contains("debias_undefined"));
    for p in [scn_path, csv_path] {
        let _ = std::fs::remove_file(p);
    }
}
