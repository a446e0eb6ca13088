//! CLI behavior: subcommand wiring, exit codes, config precedence and
//! output determinism.

use std::path::Path;
use std::process::{Command, Output};

fn cswitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cswitch"))
        .args(args)
        .output()
        .expect("cswitch binary runs")
}

fn write_miami_fixture(path: &Path) {
    let lines = [
        r#"{"sent_id":1,"filename":"f1","speaker":"MAR","age":63,"gender":"F","situation":"conversation","tokens":[{"text":"ay","raw_tag":"spa"},{"text":"yo","raw_tag":"spa"},{"text":"vi","raw_tag":"spa"},{"text":"los","raw_tag":"spa"},{"text":"kneepads","raw_tag":"eng"},{"text":".","raw_tag":"punc"}]}"#,
        r#"{"sent_id":2,"filename":"f1","speaker":"BOB","age":40,"gender":"M","situation":"conversation","tokens":[{"text":"the","raw_tag":"eng"},{"text":"school","raw_tag":"eng"},{"text":"es","raw_tag":"spa"},{"text":"grande","raw_tag":"spa"}]}"#,
        r#"{"sent_id":3,"filename":"f2","speaker":"ANA","age":null,"gender":null,"situation":"call","tokens":[{"text":"bueno","raw_tag":"spa"},{"text":"bueno","raw_tag":"spa"},{"text":"si","raw_tag":"spa"}]}"#,
    ];
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn help_lists_every_subcommand() {
    let output = cswitch(&["--help"]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    for subcommand in [
        "ingest",
        "stats",
        "annotate",
        "analyze",
        "review-sample",
        "review-score",
        "report",
    ] {
        assert!(stdout.contains(subcommand), "help is missing {subcommand}");
    }
}

#[test]
fn usage_error_exits_2() {
    let output = cswitch(&["no-such-command"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn data_error_exits_1_with_error_line() {
    let output = cswitch(&["stats", "--kind", "miami", "--input", "/nonexistent.jsonl"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.starts_with("error: "), "stderr was: {stderr}");
}

#[test]
fn malformed_input_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.jsonl");
    std::fs::write(&input, "{\"sent_id\":1}\n").unwrap();
    let output = cswitch(&[
        "stats",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("line 1"), "stderr was: {stderr}");
}

#[test]
fn ingest_filters_and_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("miami.jsonl");
    write_miami_fixture(&input);

    let out = dir.path().join("out");
    let output = cswitch(&[
        "ingest",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--filter-intrasentential",
    ]);
    assert!(output.status.success());
    let normalized = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    // Sentence 3 is monolingual and filtered out.
    assert_eq!(normalized.lines().count(), 2);
    assert!(normalized.contains("\"lang_tag\":\"spa+eng\""));

    // Ingesting the normalized output again is stable.
    let out2 = dir.path().join("out2");
    let output = cswitch(&[
        "ingest",
        "--kind",
        "miami",
        "--input",
        out.join("corpus.jsonl").to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let again = std::fs::read_to_string(out2.join("corpus.jsonl")).unwrap();
    assert_eq!(normalized, again);
}

#[test]
fn annotate_stub_writes_one_record_per_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("miami.jsonl");
    write_miami_fixture(&input);

    let out = dir.path().join("ann");
    let output = cswitch(&[
        "annotate",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "stub",
    ]);
    assert!(output.status.success());
    let records = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3);
    let failures = std::fs::read_to_string(out.join("failures.jsonl")).unwrap();
    assert!(failures.is_empty());
}

#[test]
fn annotate_replay_without_cassette_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("miami.jsonl");
    write_miami_fixture(&input);
    let output = cswitch(&[
        "annotate",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--mode",
        "replay",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8(output.stderr)
        .unwrap()
        .contains("--cassette"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("miami.jsonl");
    write_miami_fixture(&input);
    let config = dir.path().join("cswitch.conf");
    std::fs::write(&config, "batch_size = 2\nmax_retries = 0\n").unwrap();

    let out = dir.path().join("ann");
    let output = cswitch(&[
        "--config",
        config.to_str().unwrap(),
        "annotate",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "stub",
    ]);
    assert!(output.status.success());
    assert_eq!(
        std::fs::read_to_string(out.join("records.jsonl"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    // An invalid config value surfaces as a data error.
    std::fs::write(&config, "batch_size = zero\n").unwrap();
    let output = cswitch(&[
        "--config",
        config.to_str().unwrap(),
        "annotate",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "stub",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn report_emits_tables_charts_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("miami.jsonl");
    write_miami_fixture(&input);

    let ann = dir.path().join("ann");
    assert!(cswitch(&[
        "annotate",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        ann.to_str().unwrap(),
        "--mode",
        "stub",
    ])
    .status
    .success());

    let out = dir.path().join("report");
    let output = cswitch(&[
        "report",
        "--kind",
        "miami",
        "--corpus",
        input.to_str().unwrap(),
        "--records",
        ann.join("records.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    for file in [
        "stats.txt",
        "stats.csv",
        "schema_miami.txt",
        "topic_by_gender.counts.csv",
        "topic_by_gender.percent.csv",
        "topic_by_gender.percent.md",
        "function_by_gender.counts.csv",
    ] {
        assert!(out.join(file).exists(), "report did not write {file}");
    }
    // Gender tables exclude the unknown-gender sentence and say so.
    let counts = std::fs::read_to_string(out.join("topic_by_gender.counts.csv")).unwrap();
    assert!(counts.contains("# excluded: 1 (gender=Unknown)"));

    // Running report twice produces byte-identical files.
    let out2 = dir.path().join("report2");
    assert!(cswitch(&[
        "report",
        "--kind",
        "miami",
        "--corpus",
        input.to_str().unwrap(),
        "--records",
        ann.join("records.jsonl").to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ])
    .status
    .success());
    for entry in std::fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(out.join(&name)).unwrap();
        let b = std::fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between runs");
    }
}

#[test]
fn review_cycle_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("miami.jsonl");
    write_miami_fixture(&input);
    let ann = dir.path().join("ann");
    assert!(cswitch(&[
        "annotate",
        "--kind",
        "miami",
        "--input",
        input.to_str().unwrap(),
        "--out",
        ann.to_str().unwrap(),
        "--mode",
        "stub",
    ])
    .status
    .success());

    let sheet = dir.path().join("sheet.csv");
    assert!(cswitch(&[
        "review-sample",
        "--kind",
        "miami",
        "--corpus",
        input.to_str().unwrap(),
        "--records",
        ann.join("records.jsonl").to_str().unwrap(),
        "--n",
        "2",
        "--seed",
        "7",
        "--out",
        sheet.to_str().unwrap(),
    ])
    .status
    .success());

    // Scoring an unfilled sheet is an IncompleteSheet error.
    let output = cswitch(&["review-score", "--sheet", sheet.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8(output.stderr)
        .unwrap()
        .contains("unset verdicts"));

    // Fill all verdict columns with C and score again.
    let filled: String = std::fs::read_to_string(&sheet)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i < 3 || line.is_empty() {
                line.to_string()
            } else {
                // label columns alternate with verdict columns after the
                // first two fields; fill verdicts for non-empty labels.
                let fields: Vec<&str> = line.split(',').collect();
                let mut fields: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
                for i in (3..fields.len()).step_by(2) {
                    if !fields[i - 1].is_empty() {
                        fields[i] = "C".to_string();
                    }
                }
                fields.join(",")
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&sheet, filled + "\n").unwrap();
    let output = cswitch(&["review-score", "--sheet", sheet.to_str().unwrap()]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("combined: 4/4 = 100.00%"), "got:\n{stdout}");
}
