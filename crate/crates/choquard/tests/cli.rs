//! End-to-end driver tests: exit codes, file outputs, and the bit-exact
//! field-file round trip.

use choquard::fieldfile::read_field;
use choquard::model::energy;
use std::path::{Path, PathBuf};
use std::process::Output;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("choquard-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], dir: &Path) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_choquard"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn solve_path_round_trip_and_exit_zero() {
    let dir = scratch("roundtrip");
    let cfg = write_config(
        &dir,
        "run.conf",
        "n = 3\nalpha = 2.0\np = 2.0\nm = 40\nl = 20.0\nseed = 7\nout_dir = out\n",
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // Reload the field and reproduce the summary energy exactly.
    let (field, spec) = read_field(&dir.join("out/solution.field")).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap())
            .unwrap();
    let recomputed = energy(&field, &spec).unwrap();
    let stored = summary["energy"].as_f64().unwrap();
    assert!(
        (recomputed - stored).abs() <= 1e-12 * stored.abs(),
        "reloaded energy {recomputed} vs stored {stored}"
    );
    assert_eq!(summary["status"], "converged");
    assert_eq!(summary["certificate"]["pass"], true);

    // Dilation-path table from the stored field: header + 97 rows, peak at
    // the middle sample t = 1.
    let out = run(
        &[
            "path",
            "out/solution.field",
            "--config",
            cfg.to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("out/path.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 98);
    assert_eq!(lines[0], "t,energy");
    let rows: Vec<(f64, f64)> = lines[1..]
        .iter()
        .map(|l| {
            let (t, e) = l.split_once(',').unwrap();
            (t.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    let peak = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    assert_eq!(peak, 48);
    assert!((rows[48].0 - 1.0).abs() < 1e-12);
    assert!((rows[48].1 - stored).abs() <= 1e-12 * stored.abs());

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_two() {
    let dir = scratch("config-errors");
    // Unknown key.
    let bad = write_config(&dir, "bad.conf", "n = 3\nwidth = 1.0\n");
    let out = run(&["check", "--config", bad.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));

    // Missing file.
    let out = run(&["check", "--config", "no-such-file.conf"], &dir);
    assert_eq!(out.status.code(), Some(2));

    // Domain error: alpha outside (0, N).
    let dom = write_config(&dir, "dom.conf", "n = 3\nalpha = 0.0\np = 2.0\n");
    let out = run(&["check", "--config", dom.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));

    // Empty sweep set.
    let empty = write_config(&dir, "empty.conf", "sweep_points = ;\n");
    let out = run(&["sweep", "--config", empty.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));

    // Path with a missing field file.
    let cfg = write_config(&dir, "ok.conf", "n = 2\nalpha = 1.0\np = 2.5\n");
    let out = run(
        &["path", "missing.field", "--config", cfg.to_str().unwrap()],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn hypothesis_check_exit_codes() {
    let dir = scratch("check");
    let pass = write_config(&dir, "pass.conf", "n = 3\nalpha = 2.0\np = 2.0\n");
    let out = run(&["check", "--config", pass.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("1.6666666666666665"), "{text}");

    let fail = write_config(&dir, "fail.conf", "n = 2\nalpha = 1.0\np = 1.4\n");
    let out = run(&["check", "--config", fail.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn degenerate_solve_exits_three() {
    let dir = scratch("degenerate");
    // Supercritical exponent: no solution; the run ends degenerate.
    let cfg = write_config(
        &dir,
        "deg.conf",
        "n = 3\nalpha = 1.0\np = 4.5\nm = 32\nl = 12.0\nout_dir = out\n",
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap())
            .unwrap();
    let status = summary["status"].as_str().unwrap();
    assert!(status.starts_with("degenerate"), "status {status}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn certificate_failure_exits_four() {
    let dir = scratch("certificate");
    // Converged on a box too small for this state's tail: the Pohozaev
    // certificate fails while the residual certificates hold.
    let cfg = write_config(
        &dir,
        "tight.conf",
        "n = 3\nalpha = 2.0\np = 2.0\nm = 32\nl = 16.0\nout_dir = out\n",
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("pohozaev"), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dichotomy_mismatch_exits_five() {
    let dir = scratch("mismatch");
    // p = 3 is in range but under-resolved at h = 0.5: the run collapses
    // below grid resolution and is classified degenerate, which mismatches
    // the prediction (and is not a near-endpoint exclusion).
    let cfg = write_config(
        &dir,
        "sweep.conf",
        "sweep_points = 3:1.0:3.0\nsweep_m_n3 = 32\nsweep_l_n3 = 16.0\nout_dir = out\n",
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stdout));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_outputs_and_warnings_column() {
    let dir = scratch("sweep-outputs");
    let cfg = write_config(
        &dir,
        "sweep.conf",
        "sweep_points = 3:1.0:2.0; 3:1.0:1.45\nsweep_m_n3 = 32\nsweep_l_n3 = 12.0\nmax_iters = 1500\nout_dir = out\n",
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()], &dir);
    // p = 1.45 sits within the 0.2 endpoint buffer of 4/3: annotated and
    // excluded from the score, so the in-range p = 2 row decides the exit.
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].ends_with(",warnings"));
    assert_eq!(lines.len(), 3);
    assert!(lines[2].ends_with("near_endpoint"), "{}", lines[2]);

    let jsonl = std::fs::read_to_string(dir.join("out/sweep.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2);
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["interval_hi"].is_number()); // finite for N = 3
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn planar_spliced_path_csv() {
    let dir = scratch("planar-path");
    let cfg = write_config(
        &dir,
        "n2.conf",
        "n = 2\nalpha = 1.0\np = 2.5\nm = 32\nl = 20.0\nt0 = 0.1\nt_min = 0.05\nt_max = 4.0\nt_points = 33\nout_dir = out\n",
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()], &dir);
    // Certificate fails on the alpha=1 Pohozaev quadrature bias; the field
    // is still written and usable.
    assert!(matches!(out.status.code(), Some(0) | Some(4)));
    let out = run(
        &["path", "out/solution.field", "--config", cfg.to_str().unwrap()],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("out/path.csv")).unwrap();
    assert_eq!(csv.lines().count(), 34); // header + t_points
    std::fs::remove_dir_all(&dir).ok();
}
