use std::path::Path;
use std::process::{Command, Output};

use opdomain::Verdict;
use opdomain_cli::examples::EXAMPLES;
use opdomain_cli::{ConfigError, JobConfig, Report};

fn opdomain(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opdomain"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_report(path: &Path) -> Report {
    serde_json::from_slice(&std::fs::read(path).expect("report written")).expect("report parses")
}

#[test]
fn bundled_examples_parse_and_meet_their_expected_exit_codes() {
    for e in EXAMPLES {
        let cfg = JobConfig::from_str_in(e.config, Path::new(".")).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        let out = opdomain_cli::run(&cfg).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        let expected = if e.name == "afnorm_violation" { 1 } else { 0 };
        assert_eq!(out.report.exit_code, expected, "{}\n{}", e.name, out.report.summary());
    }
}

#[test]
fn every_verdict_carries_numeric_evidence() {
    for e in EXAMPLES {
        let cfg = JobConfig::from_str_in(e.config, Path::new(".")).unwrap();
        let out = opdomain_cli::run(&cfg).unwrap();
        for f in out.report.all_checks() {
            assert!(
                f.evidence.values().any(|v| v.is_finite()),
                "{}: {} has no finite evidence",
                e.name,
                f.label
            );
        }
        for s in &out.report.stages {
            assert!(!s.checks.is_empty(), "{}: stage {} has no checks", e.name, s.stage);
            assert!(!s.conclusion.is_empty());
        }
    }
}

#[test]
fn afnorm_violation_exits_one_and_prints_the_witness_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = opdomain(&["run", "--example", "afnorm_violation", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("(l, r) = (1, 1)"), "{stdout}");
    let report = read_report(&dir.path().join("o/report.json"));
    assert_eq!(report.overall, Verdict::Fail);
}

#[test]
fn missing_config_file_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = opdomain(&["run", "does-not-exist.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does-not-exist.json"));
}

#[test]
fn usage_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(opdomain(&["run"], dir.path()).status.code(), Some(3));
    assert_eq!(opdomain(&["frobnicate"], dir.path()).status.code(), Some(3));
    assert_eq!(opdomain(&["run", "--example", "nope"], dir.path()).status.code(), Some(3));
    assert_eq!(opdomain(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn examples_subcommand_lists_every_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = opdomain(&["examples"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for e in EXAMPLES {
        assert!(text.contains(e.name));
    }
}

#[test]
fn syntax_errors_report_line_and_column() {
    let err = JobConfig::from_str_in("{\n  \"job\": \"oracle\",\n  oops\n}", Path::new(".")).unwrap_err();
    match err {
        ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn schema_errors_name_the_field_path() {
    let text = r#"{"job": "check-matrix", "operator": {"entries": {"kind": "jacobi", "diag": 0, "offdiag": "k +"}}}"#;
    let err = JobConfig::from_str_in(text, Path::new(".")).unwrap_err();
    match &err {
        ConfigError::Field { path, .. } => assert!(path.starts_with("operator.entries"), "{path}"),
        other => panic!("unexpected {other}"),
    }
    let unknown = JobConfig::from_str_in(r#"{"job": "all", "operatr": {}}"#, Path::new(".")).unwrap_err();
    assert!(unknown.to_string().contains("operatr"), "{unknown}");
}

#[test]
fn job_kind_must_match_supplied_specs() {
    let err = JobConfig::from_str_in(r#"{"job": "check-diffop"}"#, Path::new(".")).unwrap_err();
    assert!(matches!(err, ConfigError::Invalid(_)), "{err}");
    let err = JobConfig::from_str_in(r#"{"job": "oracle", "oracle": {"resolvent": {}}}"#, Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("operator"), "{err}");
}

#[test]
fn file_references_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("specs")).unwrap();
    std::fs::write(
        dir.path().join("specs/op.json"),
        r#"{"entries": {"kind": "jacobi", "diag": 0, "offdiag": 1}, "bandwidth": 1}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("job.json"),
        r#"{"job": "check-matrix", "operator": {"file": "specs/op.json"}, "settings": {"ladder": [32, 64, 128]}}"#,
    )
    .unwrap();
    let cfg = JobConfig::load(&dir.path().join("job.json")).unwrap();
    assert_eq!(cfg.jacobi_coefficients().map(|(_, o)| o), Some(opdomain::operator::Seq::Const(1.0)));

    let out = opdomain(&["run", "job.json", "--out", "r"], dir.path());
    assert!(matches!(out.status.code(), Some(0..=2)), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(&dir.path().join("r/report.json"));
    assert_eq!(report.stages[0].result, "Proposition (infinite H-selfadjoint matrices)");
    for name in &report.stages[0].csv {
        assert!(dir.path().join("r").join(name).exists(), "{name}");
    }
}

#[test]
fn timestamp_appears_only_when_configured() {
    let base = r#""job": "check-diffop", "diffop": {"kind": "domination", "m": 1, "p1": "x1^2", "p2": "x1"}"#;
    let plain = JobConfig::from_str_in(&format!("{{{base}}}"), Path::new(".")).unwrap();
    let json = serde_json::to_string(&opdomain_cli::run(&plain).unwrap().report).unwrap();
    assert!(!json.contains("timestamp"));
    let stamped = JobConfig::from_str_in(&format!("{{{base}, \"timestamp\": \"2024-01-01T00:00:00Z\"}}"), Path::new(".")).unwrap();
    let report = opdomain_cli::run(&stamped).unwrap().report;
    assert_eq!(report.timestamp.as_deref(), Some("2024-01-01T00:00:00Z"));
    assert!(report.job.get("timestamp").is_none());
}

#[test]
fn seed_override_changes_only_the_echoed_seed_for_deterministic_jobs() {
    let e = opdomain_cli::examples::find("first_order_constant").unwrap();
    let mut a = JobConfig::from_str_in(e.config, Path::new(".")).unwrap();
    let mut b = a.clone();
    a.apply_overrides(Some(1), None, None);
    b.apply_overrides(Some(2), None, None);
    let (ra, rb) = (opdomain_cli::run(&a).unwrap().report, opdomain_cli::run(&b).unwrap().report);
    assert_eq!(ra.stages, rb.stages);
    assert_eq!(ra.job["seed"], 1);
}

#[test]
fn inconclusive_only_jobs_exit_two() {
    let text = r#"{
        "job": "check-diffop",
        "diffop": {
            "kind": "dirac", "m": 1, "k": 1,
            "alphas": [[[[1, 0]]]],
            "q": {"kind": "pointwise", "entries": [["sin(x1)"]]}
        }
    }"#;
    let cfg = JobConfig::from_str_in(text, Path::new(".")).unwrap();
    let report = opdomain_cli::run(&cfg).unwrap().report;
    assert_eq!(report.overall, Verdict::Inconclusive, "{}", report.summary());
    assert_eq!(report.exit_code, 2);
}
