//! Subcommand-level tests against the built binary.

mod common;

use std::fs;

use common::*;
use tempfile::tempdir;

#[test]
fn preprocess_is_line_aligned_and_idempotent() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("input.txt");
    let mut lines = String::new();
    for i in 0..10 {
        lines.push_str(&format!("Visit https://x.y NOW{i} and @user say 3.5 things\n"));
    }
    fs::write(&input, lines).unwrap();

    let once = dir.path().join("once.txt");
    let output = run_sarc(&[
        "preprocess",
        "--input",
        input.to_str().unwrap(),
        "--output",
        once.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let processed = fs::read_to_string(&once).unwrap();
    assert_eq!(processed.lines().count(), 10);

    // Running the command over its own output reproduces it byte for byte.
    let twice = dir.path().join("twice.txt");
    let output = run_sarc(&[
        "preprocess",
        "--input",
        once.to_str().unwrap(),
        "--output",
        twice.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert_eq!(fs::read_to_string(&twice).unwrap(), processed);
}

#[test]
fn preprocess_rejects_unknown_step_by_name() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("input.txt");
    fs::write(&input, "hello\n").unwrap();
    let config = dir.path().join("pp.toml");
    fs::write(
        &config,
        "[preprocess]\nstep_order = [\"selective_lowercase\", \"stemming\"]\n",
    )
    .unwrap();

    let output = run_sarc(&[
        "preprocess",
        "--config",
        config.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        dir.path().join("out.txt").to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    assert!(stderr_of(&output).contains("stemming"));
}

#[test]
fn stats_prints_rows_and_total() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    fs::write(
        &csv,
        format!(
            "{OFFICIAL_HEADER}\n\
             plain one,0,,0,0,0,0,0,0\n\
             plain two,0,,0,0,0,0,0,0\n\
             \"sly remark\",1,\"plain remark\",1,0,0,0,0,0\n\
             \"asking much\",1,,0,1,0,0,0,1\n"
        ),
    )
    .unwrap();

    let output = run_sarc(&["stats", csv.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("Non-sarcastic 2"), "{stdout}");
    assert!(stdout.contains("Only-sarcasm 1"), "{stdout}");
    assert!(stdout.contains("Irony and rhetorical question 1"), "{stdout}");
    assert!(stdout.trim_end().ends_with("Total 4"), "{stdout}");
}

#[test]
fn stats_empty_corpus_and_missing_file() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, format!("{OFFICIAL_HEADER}\n")).unwrap();
    let output = run_sarc(&["stats", csv.to_str().unwrap()]);
    assert!(output.status.success());
    assert_eq!(stdout_of(&output), "Total 0\n");

    let output = run_sarc(&["stats", dir.path().join("absent.csv").to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(!stderr_of(&output).is_empty());
}

#[test]
fn evaluate_task_a_perfect_and_mismatched() {
    let dir = tempdir().unwrap();
    let gold = dir.path().join("gold.txt");
    fs::write(&gold, "1\n0\n1\n0\n").unwrap();

    let output = run_sarc(&[
        "evaluate",
        "--task",
        "A",
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        gold.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("f1_positive 1.0000"));

    let short = dir.path().join("short.txt");
    fs::write(&short, "1\n0\n").unwrap();
    let output = run_sarc(&[
        "evaluate",
        "--task",
        "A",
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        short.to_str().unwrap(),
    ]);
    assert!(!output.status.success());
    let stderr = stderr_of(&output);
    assert!(stderr.contains('4') && stderr.contains('2'), "{stderr}");
}

/// Builds a six-column flag file pair whose per-class F1 column equals the
/// published class-wise results, then checks the macro score through the
/// task-B evaluation path.
#[test]
fn evaluate_task_b_reproduces_published_macro() {
    // Per class: (tp, fp+fn split evenly) chosen so that
    // f1 = 2tp / (2tp + fp + fn) matches the published rounding exactly.
    // Classes: sarcasm 0.2294, irony 0.0963, satire 0.0833,
    // understatement 0, overstatement 0, rhetorical question 0.0414.
    let cells: [(u64, u64, u64); 6] = [
        (1147, 3853, 3853), // 2294/10000
        (963, 9037, 9037),  // 1926/20000
        (833, 9167, 9167),  // 1666/20000
        (0, 0, 5),          // positives exist, none predicted
        (0, 0, 5),
        (207, 4793, 4793), // 414/10000
    ];
    let n: u64 = 20000;

    let mut gold_rows: Vec<[u8; 6]> = vec![[0; 6]; n as usize];
    let mut pred_rows: Vec<[u8; 6]> = vec![[0; 6]; n as usize];
    for (class, &(tp, fp, fnn)) in cells.iter().enumerate() {
        let mut row = 0usize;
        for _ in 0..tp {
            gold_rows[row][class] = 1;
            pred_rows[row][class] = 1;
            row += 1;
        }
        for _ in 0..fp {
            pred_rows[row][class] = 1;
            row += 1;
        }
        for _ in 0..fnn {
            gold_rows[row][class] = 1;
            row += 1;
        }
        assert!(row <= n as usize);
    }

    let render = |rows: &[[u8; 6]]| {
        let mut out = String::from(
            "sarcasm,irony,satire,understatement,overstatement,rhetorical_question\n",
        );
        for row in rows {
            let cells: Vec<String> = row.iter().map(u8::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    };

    let dir = tempdir().unwrap();
    let gold = dir.path().join("gold.csv");
    let pred = dir.path().join("pred.csv");
    fs::write(&gold, render(&gold_rows)).unwrap();
    fs::write(&pred, render(&pred_rows)).unwrap();

    let output = run_sarc(&[
        "evaluate",
        "--task",
        "B",
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        pred.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("macro_f1 0.0751"), "{stdout}");
    assert!(stdout.contains("f1_sarcasm 0.2294"), "{stdout}");
    assert!(stdout.contains("f1_understatement 0.0000"), "{stdout}");
}

#[test]
fn evaluate_task_c_half_correct() {
    let dir = tempdir().unwrap();
    let gold = dir.path().join("gold.txt");
    let pred = dir.path().join("pred.txt");
    fs::write(&gold, "0\n0\n1\n1\n").unwrap();
    fs::write(&pred, "0\n1\n1\n0\n").unwrap();
    let output = run_sarc(&[
        "evaluate",
        "--task",
        "C",
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        pred.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(stdout_of(&output).contains("accuracy 0.5000"));
}

#[test]
fn export_converts_to_interchange() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("aux.tsv");
    fs::write(
        &csv,
        "Tweet index\tLabel\tTweet text\n1\t1\tironically great\n2\t0\tplainly fine\n",
    )
    .unwrap();
    let jsonl = dir.path().join("aux.jsonl");
    let output = run_sarc(&[
        "export",
        "--format",
        "binary",
        "--source",
        "SEMEVAL18_TRAIN",
        "--text-column",
        "Tweet text",
        "--label-column",
        "Label",
        "--delimiter",
        "tab",
        "--input",
        csv.to_str().unwrap(),
        "--output",
        jsonl.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let content = fs::read_to_string(&jsonl).unwrap();
    assert_eq!(content.lines().count(), 2);
    assert!(content.contains("\"source\":\"SEMEVAL18_TRAIN\""));

    // Interchange files feed back into stats.
    let output = run_sarc(&["stats", jsonl.to_str().unwrap()]);
    assert!(output.status.success());
    assert!(stdout_of(&output).contains("Total 2"));
}

#[test]
fn augment_writes_three_variants_per_instance() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("train.csv");
    write_official_csv(&csv, 9);
    let out = dir.path().join("aug.jsonl");
    let output = run_sarc(&[
        "augment",
        "--input",
        csv.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--label",
        "sarcasm",
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let lines = fs::read_to_string(&out).unwrap();
    // Rows 0, 3, 6 are sarcastic and all carry the sarcasm flag (the
    // `official_row` pattern), so three parents yield nine variants.
    assert_eq!(lines.lines().count(), 9);
    assert!(lines.contains("\"source\":\"AUGMENTED\""));
}

#[test]
fn run_requires_matching_task_section() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        r#"
task = "A"
output_dir = "unused"

[task_b.source]
format = "isarcasm"
path = "missing.csv"
"#,
    )
    .unwrap();
    let output = run_sarc(&["run", "--config", config.to_str().unwrap()]);
    assert!(!output.status.success());
    let stderr = stderr_of(&output);
    assert!(stderr.contains("task_a") || stderr.contains("task_b"), "{stderr}");
}

#[test]
fn run_task_b_writes_six_checkpoints_and_submission() {
    let dir = tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_official_csv_all_labels(&train, 180);
    let eval = dir.path().join("eval.txt");
    write_eval_lines(&eval, 12);
    let out = dir.path().join("out-b");
    let config = dir.path().join("exp_b.toml");
    fs::write(
        &config,
        format!(
            r#"
task = "B"
output_dir = "{out}"

[task_b]
eval_path = "{eval}"

[task_b.source]
format = "isarcasm"
path = "{train}"

[task_b.hparams]
learning_rate = 5e-3
max_seq_len = 16
batch_size = 16
epochs = 2
"#,
            out = out.display(),
            train = train.display(),
            eval = eval.display(),
        ),
    )
    .unwrap();

    let output = run_sarc(&["run", "--config", config.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    // Six checkpoints, one per category, in fixed order in the submission.
    for label in [
        "sarcasm",
        "irony",
        "satire",
        "understatement",
        "overstatement",
        "rhetorical_question",
    ] {
        assert!(out.join("checkpoints").join(label).join("params.bin").is_file());
    }
    let submission = fs::read_to_string(out.join("submission.csv")).unwrap();
    let mut lines = submission.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sarcasm,irony,satire,understatement,overstatement,rhetorical_question"
    );
    assert_eq!(lines.count(), 12);

    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("macro_f1"), "{report}");
}

#[test]
fn run_task_c_from_checkpoint() {
    let dir = tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_official_csv(&train, 240);
    let out_a = dir.path().join("out-a");
    let config_a = dir.path().join("exp_a.toml");
    fs::write(
        &config_a,
        format!(
            r#"
task = "A"
output_dir = "{out}"

[[task_a.sources]]
format = "isarcasm"
path = "{train}"

[task_a.hparams]
learning_rate = 5e-3
max_seq_len = 16
batch_size = 16
epochs = 4
"#,
            out = out_a.display(),
            train = train.display(),
        ),
    )
    .unwrap();
    let output = run_sarc(&["run", "--config", config_a.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    // Pairs: the sarcastic (sentinel) text alternates slots.
    let pairs = dir.path().join("pairs.csv");
    let gold = dir.path().join("gold.txt");
    let mut pair_rows = String::from("text_0,text_1\n");
    let mut gold_rows = String::new();
    for i in 0..20 {
        let sarcastic = format!("{} {SENTINEL} indeed", FILLERS[i % 8]);
        let plain = format!("{} ordinary words", FILLERS[(i + 2) % 8]);
        if i % 2 == 0 {
            pair_rows.push_str(&format!("{sarcastic},{plain}\n"));
            gold_rows.push_str("0\n");
        } else {
            pair_rows.push_str(&format!("{plain},{sarcastic}\n"));
            gold_rows.push_str("1\n");
        }
    }
    fs::write(&pairs, pair_rows).unwrap();
    fs::write(&gold, gold_rows).unwrap();

    let out_c = dir.path().join("out-c");
    let config_c = dir.path().join("exp_c.toml");
    fs::write(
        &config_c,
        format!(
            r#"
task = "C"
output_dir = "{out}"

[task_c]
pairs_path = "{pairs}"
gold_path = "{gold}"
checkpoint = "{checkpoint}"
"#,
            out = out_c.display(),
            pairs = pairs.display(),
            gold = gold.display(),
            checkpoint = out_a.join("checkpoint").display(),
        ),
    )
    .unwrap();
    let output = run_sarc(&["run", "--config", config_c.to_str().unwrap()]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    let submission = fs::read_to_string(out_c.join("submission.txt")).unwrap();
    assert_eq!(submission.lines().count(), 20);
    let report = fs::read_to_string(out_c.join("report.txt")).unwrap();
    let accuracy: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("accuracy "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(accuracy >= 0.9, "pair accuracy {accuracy}");
}

#[test]
fn failed_run_quarantines_partial_outputs() {
    let dir = tempdir().unwrap();
    let train = dir.path().join("train.csv");
    write_official_csv(&train, 60);
    let config = dir.path().join("exp.toml");
    let output_dir = dir.path().join("out");
    fs::write(
        &config,
        format!(
            r#"
task = "A"
output_dir = "{out}"

[[task_a.sources]]
format = "isarcasm"
path = "{train}"

[task_a.hparams]
epochs = 1
max_seq_len = 16

[task_a.preprocess]
stopwords = "{missing}"
"#,
            out = output_dir.display(),
            train = train.display(),
            missing = dir.path().join("no-such-stopwords.txt").display(),
        ),
    )
    .unwrap();
    let output = run_sarc(&["run", "--config", config.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(output_dir.join("failed").is_dir());
}
