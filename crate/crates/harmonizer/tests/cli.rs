//! End-to-end tests driving the harmonize binary: exit codes, piping,
//! verification, and store workflows.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn harmonize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmonize"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run_cohort_job(out: &Path, log: &Path) -> Output {
    let f = fixtures();
    harmonize(&[
        "harmonize",
        "--inputs",
        &path_str(&f.join("data/cohort-a.csv")),
        &path_str(&f.join("data/cohort-b.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--rules",
        &path_str(&f.join("rules")),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(out),
        "--log",
        &path_str(log),
    ])
}

#[test]
fn validate_fixture_rules_passes() {
    let f = fixtures();
    let output = harmonize(&[
        "validate",
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--rules",
        &path_str(&f.join("rules")),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout(&output).lines().all(|l| l.starts_with("ok")));
}

#[test]
fn validate_missing_path_exits_2() {
    let f = fixtures();
    let output = harmonize(&[
        "validate",
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--rules",
        "/nonexistent/rules.json",
    ]);
    assert_eq!(code(&output), 2);
}

#[test]
fn validate_ill_typed_rule_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // operations reversed: Bin cannot consume the string source
    let rule = r#"{
  "Source": {"dictionary": "health-survey", "element": "age_text"},
  "Target": {"dictionary": "age-harmonized", "element": "age_range"},
  "Operations": [
    {"primitive": "Bin", "params": {"bins": [
      {"lower": "MIN", "upper": 30, "label": "30 or Under"},
      {"lower": 31, "upper": "MAX", "label": "Over 70"}
    ]}},
    {"primitive": "Cast", "params": {"source": "string", "target": "integer"}}
  ]
}"#;
    let rule_path = dir.path().join("reversed.rule.json");
    std::fs::write(&rule_path, rule).unwrap();
    let output = harmonize(&[
        "validate",
        "--dictionaries",
        &path_str(&fixtures().join("dictionaries")),
        "--rules",
        &path_str(&rule_path),
    ]);
    assert_eq!(code(&output), 1);
    assert!(stdout(&output).contains("operation 1"));
}

#[test]
fn harmonize_writes_output_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("integrated.csv");
    let log = dir.path().join("job.ndjson");
    let output = run_cohort_job(&out, &log);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("nih_employment,commute_distance_miles,source_dataset,original_id\n"));
    assert_eq!(text.lines().count(), 1 + 15);
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);

    // identical re-run produces identical bytes
    let out2 = dir.path().join("integrated2.csv");
    let log2 = dir.path().join("job2.ndjson");
    run_cohort_job(&out2, &log2);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
    assert_eq!(std::fs::read(&log).unwrap(), std::fs::read(&log2).unwrap());
}

#[test]
fn harmonize_json_format_reports_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("integrated.csv");
    let log = dir.path().join("job.ndjson");
    let f = fixtures();
    let output = harmonize(&[
        "--format",
        "json",
        "harmonize",
        "--inputs",
        &path_str(&f.join("data/cohort-a.csv")),
        &path_str(&f.join("data/cohort-b.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--rules",
        &path_str(&f.join("rules")),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(&out),
        "--log",
        &path_str(&log),
    ]);
    assert_eq!(code(&output), 0);
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(parsed["rows"], 15);
    assert_eq!(parsed["log_entries"], 3);
    assert_eq!(parsed["files"].as_array().unwrap().len(), 2);
}

#[test]
fn harmonize_uncovered_element_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let output = harmonize(&[
        "harmonize",
        "--inputs",
        &path_str(&f.join("data/cohort-a.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--target",
        "age-harmonized",
        "--output",
        &path_str(&dir.path().join("out.csv")),
    ]);
    assert_eq!(code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("age_range"));
}

#[test]
fn replay_verifies_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("integrated.csv");
    let log = dir.path().join("job.ndjson");
    assert_eq!(code(&run_cohort_job(&out, &log)), 0);

    let f = fixtures();
    let replayed = dir.path().join("replayed.csv");
    let verify_ok = harmonize(&[
        "replay",
        "--log",
        &path_str(&log),
        "--originals",
        &path_str(&f.join("data/cohort-a.csv")),
        &path_str(&f.join("data/cohort-b.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(&replayed),
        "--verify",
        &path_str(&out),
    ]);
    assert_eq!(code(&verify_ok), 0);
    assert_eq!(stdout(&verify_ok).trim(), "MATCH");

    let tampered = dir.path().join("tampered.csv");
    let mut bytes = std::fs::read(&out).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = bytes[last].wrapping_add(1);
    std::fs::write(&tampered, bytes).unwrap();
    let verify_bad = harmonize(&[
        "replay",
        "--log",
        &path_str(&log),
        "--originals",
        &path_str(&f.join("data/cohort-a.csv")),
        &path_str(&f.join("data/cohort-b.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(&replayed),
        "--verify",
        &path_str(&tampered),
    ]);
    assert_eq!(code(&verify_bad), 1);
    assert_eq!(stdout(&verify_bad).trim(), "MISMATCH");
}

#[test]
fn replay_with_missing_original_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("integrated.csv");
    let log = dir.path().join("job.ndjson");
    assert_eq!(code(&run_cohort_job(&out, &log)), 0);

    let f = fixtures();
    let output = harmonize(&[
        "replay",
        "--log",
        &path_str(&log),
        "--originals",
        &path_str(&f.join("data/cohort-a.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(&dir.path().join("replayed.csv")),
    ]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("cohort-b"));
}

#[test]
fn rules_store_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let f = fixtures();

    // empty store: show prints nothing, exits 0
    let empty = harmonize(&["rules", "show", "--store", &path_str(&store)]);
    assert_eq!(code(&empty), 0);
    assert!(stdout(&empty).is_empty());

    let put = harmonize(&[
        "rules",
        "put",
        "--store",
        &path_str(&store),
        &path_str(&f.join("rules/employment-a-to-nih.rule.json")),
        &path_str(&f.join("rules/employment-b-to-nih.rule.json")),
        &path_str(&f.join("rules/commute-km-to-miles.rule.json")),
    ]);
    assert_eq!(code(&put), 0);

    let list = harmonize(&[
        "rules",
        "list",
        "--store",
        &path_str(&store),
        "--target",
        "nih_employment",
    ]);
    assert_eq!(code(&list), 0);
    let listed = stdout(&list);
    let lines: Vec<&str> = listed.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| l.ends_with("nih-harmonized/nih_employment")));

    let show = harmonize(&[
        "rules",
        "show",
        "--store",
        &path_str(&store),
        "--source",
        "employment-survey-b/commute_distance_km",
    ]);
    assert_eq!(code(&show), 0);
    assert!(stdout(&show).contains("\"primitive\": \"ConvertUnits\""));

    // invalid rule document: domain failure
    let bad = dir.path().join("bad.rule.json");
    std::fs::write(&bad, "{\"Source\": {}}").unwrap();
    let put_bad = harmonize(&["rules", "put", "--store", &path_str(&store), &path_str(&bad)]);
    assert_eq!(code(&put_bad), 1);
}

#[test]
fn store_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let f = fixtures();
    let output = Command::new(env!("CARGO_BIN_EXE_harmonize"))
        .env("HARMONIZE_STORE", &store)
        .args([
            "rules",
            "put",
            &path_str(&f.join("rules/age_text-to-age_range.rule.json")),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(store.join("index.json").exists());
}

#[test]
fn duplicate_rules_from_files_and_store_are_not_ambiguous() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let f = fixtures();
    let put = harmonize(&[
        "rules",
        "put",
        "--store",
        &path_str(&store),
        &path_str(&f.join("rules/employment-a-to-nih.rule.json")),
    ]);
    assert_eq!(code(&put), 0);
    let out = dir.path().join("out.csv");
    let output = harmonize(&[
        "harmonize",
        "--inputs",
        &path_str(&f.join("data/cohort-a.csv")),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--rules",
        &path_str(&f.join("rules/employment-a-to-nih.rule.json")),
        "--store",
        &path_str(&store),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(&out),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn conforming_file_with_zero_rules_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("already.csv");
    std::fs::write(&input, "nih_employment,commute_distance_miles\n1,3.5\n2,12.25\n").unwrap();
    let out = dir.path().join("out.csv");
    let log = dir.path().join("log.ndjson");
    let f = fixtures();
    let output = harmonize(&[
        "harmonize",
        "--inputs",
        &path_str(&input),
        "--dictionaries",
        &path_str(&f.join("dictionaries")),
        "--target",
        "nih-harmonized",
        "--output",
        &path_str(&out),
        "--log",
        &path_str(&log),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("1,3.5,already,1\n"));
    assert!(text.contains("2,12.25,already,2\n"));
    assert_eq!(std::fs::read_to_string(&log).unwrap(), "");
}

#[test]
fn single_file_harmonize_pipes_stdin_to_stdout() {
    use std::io::Write;

    let f = fixtures();
    let survey = std::fs::read(f.join("data/survey.csv")).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_harmonize"))
        .args([
            "harmonize",
            "--inputs",
            "-",
            "--dictionaries",
            &path_str(&f.join("dictionaries")),
            "--rules",
            &path_str(&f.join("rules/age_text-to-age_range.rule.json")),
            "--target",
            "age-harmonized",
            "--output",
            "-",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.as_mut().unwrap().write_all(&survey).unwrap();
    let output = child.wait_with_output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8_lossy(&output.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "age_range,source_dataset,original_id"
    );
    assert_eq!(lines.next().unwrap(), "0,stdin,1");
    assert_eq!(text.lines().count(), 11);
}
