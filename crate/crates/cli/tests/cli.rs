use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rdeid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdeid"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

/// Rows of a table without the run comment and the header.
fn read_table(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap().to_string();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (comment, header, rows)
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn condition_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdeid(
        &[
            "condition",
            "--config",
            &config("fig1a.toml"),
            "--delta-max",
            "1.5",
            "--delta-steps",
            "11",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (comment, header, rows) = read_table(&dir.path().join("condition.csv"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    let run = comment
        .split_whitespace()
        .nth(2)
        .unwrap()
        .trim_end_matches(',');
    assert!(manifest.contains(&format!("run_id = \"{run}\"")));
    assert!(manifest.contains("outputs = [\"condition.csv\"]"));
    assert_eq!(header[0], "delta[time]");
    assert_eq!(rows.len(), 11 * 4);
    assert_eq!(rows[0][0], "0.5");
    assert_eq!(rows[0][4], "closed-form");
    assert!(rows.iter().any(|r| r[5] == "true"));
}

#[test]
fn small_values_use_scientific_notation() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdeid(&["condition", "--delta-steps", "6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (_, _, rows) = read_table(&dir.path().join("condition.csv"));
    for field in rows.iter().flat_map(|r| r[2..4].iter()) {
        let v: f64 = field.parse().unwrap();
        if v != 0.0 && v.abs() < 1e-4 {
            assert!(field.contains('e'), "{field}");
        } else {
            assert!(!field.contains('e'), "{field}");
        }
    }
}

#[test]
fn identical_runs_give_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "esprit",
        "--config",
        &config("fig1b.toml"),
        "--delta-max",
        "1",
        "--delta-steps",
        "6",
    ];
    assert_eq!(rdeid(&args, a.path()).status.code(), Some(0));
    assert_eq!(rdeid(&args, b.path()).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("esprit.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn precision_flag_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    for p in ["16", "32", "100"] {
        let out = rdeid(
            &[
                "condition",
                "--precision",
                p,
                "--delta-steps",
                "3",
                "--delta-max",
                "1",
            ],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "precision {p}");
        let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert!(manifest.contains(&format!("precision = {p}")));
    }
}

#[test]
fn validation_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nrates = [1, 4]\n").unwrap();
    let bad = bad.display().to_string();
    let missing = dir.path().join("missing.toml").display().to_string();
    for args in [
        vec!["condition", "--config", bad.as_str()],
        vec!["condition", "--config", missing.as_str()],
        vec!["condition", "--delta-min", "0"],
        vec!["esprit", "--epsilon", "0"],
    ] {
        let out = rdeid(&args, &dir.path().join("o"));
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let out = rdeid(&["condition", "--precision", "20"], dir.path());
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn breakdowns_exit_2_and_name_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdeid(
        &[
            "esprit",
            "--config",
            &config("fig1b.toml"),
            "--delta-min",
            "1",
            "--delta-max",
            "2.2",
            "--delta-steps",
            "13",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Delta = 2.2"), "{err}");
    // Successful steps are still written.
    let (_, _, rows) = read_table(&dir.path().join("esprit.csv"));
    assert!(rows.iter().any(|r| r[0] == "1"));
}

#[test]
fn bounds_table_checks_hold() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdeid(&["bounds", "--config", &config("bounds.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (_, header, rows) = read_table(&dir.path().join("bounds.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 8 * 4);
    for r in &rows {
        assert_eq!(r[col("theta_bounds_hold")], "true");
        assert_ne!(r[col("lagrange_bound_holds")], "false");
        assert!(r[col("identity_error[1]")].parse::<f64>().unwrap() < 1e-10);
    }
}

#[test]
fn simulate_writes_field_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdeid(
        &[
            "simulate",
            "--config",
            &config("fig2.toml"),
            "--precision",
            "16",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, _, field) = read_table(&dir.path().join("field.csv"));
    assert_eq!(field.len(), 21 * 62);
    let (_, _, series) = read_table(&dir.path().join("measurements.csv"));
    assert_eq!(series.len(), 1025);
    let (_, _, modes) = read_table(&dir.path().join("modes.csv"));
    let z1: f64 = modes[0][2].parse().unwrap();
    assert!((z1 - 0.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn pipeline_recovers_the_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    let text = std::fs::read_to_string(configs().join("fig5.toml")).unwrap();
    std::fs::write(
        &cfg,
        text.replace("stride_min = 1", "stride_min = 60\nstride_max = 80"),
    )
    .unwrap();
    let out = rdeid(
        &[
            "pipeline",
            "--config",
            &cfg.display().to_string(),
            "--precision",
            "32",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, header, rows) = read_table(&dir.path().join("pq.csv"));
    assert_eq!(rows.len(), 21);
    let p_err = header
        .iter()
        .position(|h| h == "p_relative_error[1]")
        .unwrap();
    let best = rows
        .iter()
        .map(|r| r[p_err].parse::<f64>().unwrap())
        .fold(f64::MAX, f64::min);
    assert!(best < 1e-2, "best p error {best}");
    let (_, _, errors) = read_table(&dir.path().join("pipeline.csv"));
    assert_eq!(errors.len(), 21 * 4);
    assert!(errors.iter().all(|r| r[8] == "ok"));
}

#[test]
fn verify_reports_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdeid(&["verify"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("criterion "))
        .collect();
    assert_eq!(lines.len(), 9);
    let all_pass = lines.iter().all(|l| l.contains("[PASS]"));
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
}
