//! End-to-end tests of the binary: exit codes and the single-line error
//! contract, fixture estimates through the file formats, the pvar verb
//! against the library, and byte-identical simulation.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use recurvar::estimators::{estimate, EstimatorKind};
use recurvar::process::{read_sample, Design};
use recurvar::stepfn::{pvar, StepFunction};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recurvar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// Asserts the single-line error contract: `ERROR <code>: <message>`.
fn assert_error(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", stderr(out));
    let err = stderr(out);
    assert!(
        err.starts_with(&format!("ERROR {code}: ")),
        "stderr does not match the contract: {err:?}"
    );
    assert_eq!(err.trim_end_matches('\n').lines().count(), 1, "stderr: {err:?}");
}

/// Parses a numeric CSV with a header into rows of f64 columns.
fn read_table(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).expect("file exists");
    let mut lines = text.lines();
    let header = lines.next().expect("header").to_string();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|field| {
                    if field.is_empty() {
                        f64::NAN
                    } else {
                        field.parse().unwrap_or_else(|_| panic!("bad field {field:?}"))
                    }
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn write_dataset_a(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let subjects = dir.join("subjects.csv");
    let events = dir.join("events.csv");
    fs::write(&subjects, "id,followup,reason,z\n1,4,censoring,\n2,2,censoring,\n").unwrap();
    fs::write(&events, "id,time\n1,1\n2,2\n").unwrap();
    (subjects, events)
}

#[test]
fn bad_arguments_exit_2() {
    assert_error(&run(&[]), 2);
    assert_error(&run(&["estimate", "--design", "bogus"]), 2);
    assert_error(&run(&["study", "nope", "--config", "x", "--out", "y"]), 2);
}

#[test]
fn help_exits_0() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("estimate"));
}

#[test]
fn file_and_format_problems_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("curve.csv");
    let missing = run(&[
        "estimate",
        "--design", "observed",
        "--subjects", "/nonexistent/subjects.csv",
        "--events", "/nonexistent/events.csv",
        "--horizon", "3",
        "--out", out_csv.to_str().unwrap(),
    ]);
    assert_error(&missing, 3);

    // an event after the follow-up end is a data error, not an estimator one
    let subjects = dir.path().join("subjects.csv");
    let events = dir.path().join("events.csv");
    fs::write(&subjects, "id,followup,reason,z\n1,1,censoring,\n").unwrap();
    fs::write(&events, "id,time\n1,5\n").unwrap();
    let inconsistent = run(&[
        "estimate",
        "--design", "observed",
        "--subjects", subjects.to_str().unwrap(),
        "--events", events.to_str().unwrap(),
        "--horizon", "3",
        "--out", out_csv.to_str().unwrap(),
    ]);
    assert_error(&inconsistent, 3);
}

#[test]
fn exhausted_risk_set_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let subjects = dir.path().join("subjects.csv");
    let events = dir.path().join("events.csv");
    fs::write(&subjects, "id,followup,reason,z\n1,1,censoring,\n2,2,censoring,\n").unwrap();
    fs::write(&events, "id,time\n").unwrap();
    let out = run(&[
        "estimate",
        "--design", "observed",
        "--subjects", subjects.to_str().unwrap(),
        "--events", events.to_str().unwrap(),
        "--horizon", "3",
        "--out", dir.path().join("curve.csv").to_str().unwrap(),
    ]);
    assert_error(&out, 4);
}

#[test]
fn study_precondition_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"lambda": 1.0, "n_list": [10], "B": 4, "seed": 1}"#).unwrap();
    let out = run(&[
        "study", "convergence",
        "--config", config.to_str().unwrap(),
        "--out", dir.path().join("study").to_str().unwrap(),
    ]);
    assert_error(&out, 5);
}

#[test]
fn fixture_estimate_writes_exact_curve_and_pseudo_values() {
    let dir = tempfile::tempdir().unwrap();
    let (subjects, events) = write_dataset_a(dir.path());
    let curve_csv = dir.path().join("curve.csv");
    let pseudo_csv = dir.path().join("pseudo.csv");
    let out = run(&[
        "estimate",
        "--design", "observed",
        "--subjects", subjects.to_str().unwrap(),
        "--events", events.to_str().unwrap(),
        "--horizon", "3",
        "--grid", "1,2,3",
        "--out", curve_csv.to_str().unwrap(),
        "--pseudo", "2",
        "--pseudo-out", pseudo_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("design: observed"), "stdout: {text}");
    assert!(text.contains("n = 2, horizon = 3"), "stdout: {text}");

    let (header, rows) = read_table(&curve_csv);
    assert_eq!(header, "s,mu_hat,k_hat,var_hat,se_hat");
    assert_eq!(rows.len(), 3);
    let mu: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let k: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    assert_eq!(mu, [0.5, 1.0, 1.0]);
    assert_eq!(k, [1.0, 1.0, 0.5]);
    assert!(rows.iter().all(|r| r[3] >= 0.0 && r[4] >= 0.0));

    let (header, rows) = read_table(&pseudo_csv);
    assert_eq!(header, "id,z,pseudo");
    assert_eq!(rows.len(), 2);
    for (row, id) in rows.iter().zip([1.0, 2.0]) {
        assert_eq!(row[0], id);
        assert!(row[1].is_nan(), "z column should be empty");
        assert_eq!(row[2], 1.0);
    }

    // at t = 3 the leave-one-out subsample without subject 1 has an empty
    // risk set, which is an estimator failure
    let out = run(&[
        "estimate",
        "--design", "observed",
        "--subjects", subjects.to_str().unwrap(),
        "--events", events.to_str().unwrap(),
        "--horizon", "3",
        "--out", curve_csv.to_str().unwrap(),
        "--pseudo", "3",
        "--pseudo-out", pseudo_csv.to_str().unwrap(),
    ]);
    assert_error(&out, 4);
}

#[test]
fn influence_dump_is_centered() {
    let dir = tempfile::tempdir().unwrap();
    let (subjects, events) = write_dataset_a(dir.path());
    let influence_csv = dir.path().join("influence.csv");
    let out = run(&[
        "estimate",
        "--design", "observed",
        "--subjects", subjects.to_str().unwrap(),
        "--events", events.to_str().unwrap(),
        "--horizon", "3",
        "--out", dir.path().join("curve.csv").to_str().unwrap(),
        "--dump-influence", influence_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let (header, rows) = read_table(&influence_csv);
    assert_eq!(header, "id,s,influence");
    let mut by_s: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
    for row in &rows {
        *by_s.entry(row[1].to_bits()).or_insert(0.0) += row[2];
    }
    assert!(!by_s.is_empty());
    for (&s_bits, &sum) in &by_s {
        assert!(sum.abs() <= 1e-9, "column at s = {} sums to {sum}", f64::from_bits(s_bits));
    }
}

#[test]
fn pvar_verb_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("step.csv");
    fs::write(&input, "time,value\n0,0.25\n0.5,1.25\n1.2,-0.75\n2,0.5\n").unwrap();
    let out = run(&["pvar", "--input", input.to_str().unwrap(), "--p", "1.5", "--oracle"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);

    let f = StepFunction::new(0.25, [(0.5, 1.0), (1.2, -2.0), (2.0, 1.25)]).unwrap();
    let expected = pvar(&f, 1.5).unwrap();
    let reported: f64 = text
        .lines()
        .find_map(|line| line.strip_prefix("v_p = "))
        .expect("v_p line")
        .parse()
        .unwrap();
    let tol = 5e-9 * expected.v_p.max(1.0);
    assert!((reported - expected.v_p).abs() <= tol, "{reported} vs {}", expected.v_p);
    assert!(text.contains("partition: "), "stdout: {text}");
    assert!(text.contains("oracle agreement: within 1e-12 relative"), "stdout: {text}");

    // a malformed header is a format problem
    fs::write(&input, "t,v\n0,0\n").unwrap();
    assert_error(&run(&["pvar", "--input", input.to_str().unwrap(), "--p", "1.5"]), 3);
}

#[test]
fn simulate_is_reproducible_and_feeds_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"lambda": 1.0, "censor_rate": 0.5, "tau": 4.0, "n": 30, "design": "censored", "seed": 11}"#,
    )
    .unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    for out_dir in [&first, &second] {
        let out = run(&[
            "simulate",
            "--config", config.to_str().unwrap(),
            "--out", out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    for name in ["subjects.csv", "events.csv", "latent.csv", "latent_events.csv"] {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    // a different seed changes the draw
    let out = run(&[
        "simulate",
        "--config", config.to_str().unwrap(),
        "--out", dir.path().join("reseeded").to_str().unwrap(),
        "--seed", "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let a = fs::read(first.join("events.csv")).unwrap();
    let b = fs::read(dir.path().join("reseeded").join("events.csv")).unwrap();
    assert_ne!(a, b);

    // the written files drive the estimator to the in-process result
    let subjects = first.join("subjects.csv");
    let events = first.join("events.csv");
    let curve_csv = dir.path().join("curve.csv");
    let out = run(&[
        "estimate",
        "--design", "censored",
        "--subjects", subjects.to_str().unwrap(),
        "--events", events.to_str().unwrap(),
        "--horizon", "3",
        "--out", curve_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let sample = read_sample(&subjects, &events, Design::Censored).unwrap();
    let curve = estimate(&sample, EstimatorKind::IpcwCensored, 3.0, None).unwrap();
    let (_, rows) = read_table(&curve_csv);
    assert_eq!(rows.len(), curve.grid().len());
    for (row, &s) in rows.iter().zip(curve.grid()) {
        assert!((row[0] - s).abs() <= 5e-9 * s.max(1.0));
        let mu = curve.mu_at(s);
        assert!((row[1] - mu).abs() <= 5e-9 * mu.max(1.0), "{} vs {mu}", row[1]);
    }
}

#[test]
fn coverage_study_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"lambda": 1.0, "censor_rate": 0.5, "t": 2.0, "n": 30, "B": 6, "design": "observed", "seed": 3}"#,
    )
    .unwrap();
    let study_dir = dir.path().join("study");
    let out = run(&[
        "study", "coverage",
        "--config", config.to_str().unwrap(),
        "--out", study_dir.to_str().unwrap(),
        "--threads", "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("95% Wald coverage"));
    let (header, rows) = read_table(&study_dir.join("replications.csv"));
    assert_eq!(header, "rep,mu_hat,se_hat,lower,upper,covered");
    assert!(!rows.is_empty() && rows.len() <= 6);
    for row in &rows {
        assert!(row[3] <= row[1] && row[1] <= row[4], "interval misses its center: {row:?}");
        assert!(row[5] == 0.0 || row[5] == 1.0);
    }
}
