//! Shared fixtures for the integration and acceptance suites.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Sentinel token that marks the positive class in synthetic data. Chosen so
/// its hash bucket in the bundled encoder does not collide with any filler
/// word (asserted by `sentinel_is_separable`).
pub const SENTINEL: &str = "zephyrine";

pub const FILLERS: [&str; 8] = [
    "alpha", "bravo", "delta", "echo", "foxtrot", "golf", "hotel", "india",
];

pub const OFFICIAL_HEADER: &str =
    "tweet,sarcastic,rephrase,sarcasm,irony,satire,understatement,overstatement,rhetorical_question";

/// One synthetic official-format row. Sarcastic rows contain the sentinel,
/// carry a category flag, and provide a rephrase.
pub fn official_row(index: usize, sarcastic: bool) -> String {
    let filler_a = FILLERS[index % FILLERS.len()];
    let filler_b = FILLERS[(index * 5 + 2) % FILLERS.len()];
    if sarcastic {
        let flags = match index % 3 {
            0 => "1,0,0,0,0,0",
            1 => "0,1,0,0,0,1",
            _ => "1,0,1,0,0,0",
        };
        format!(
            "{filler_a} {SENTINEL} {filler_b} take{index},1,plainly {filler_a} number{index},{flags}"
        )
    } else {
        format!("{filler_a} {filler_b} ordinary take{index},0,,0,0,0,0,0,0")
    }
}

/// Writes a synthetic official-format training file; every third row is
/// sarcastic.
pub fn write_official_csv(path: &Path, rows: usize) -> (usize, usize) {
    let mut content = String::from(OFFICIAL_HEADER);
    content.push('\n');
    let mut positives = 0;
    for index in 0..rows {
        let sarcastic = index % 3 == 0;
        positives += usize::from(sarcastic);
        content.push_str(&official_row(index, sarcastic));
        content.push('\n');
    }
    fs::write(path, content).unwrap();
    (rows, positives)
}

/// Like [`write_official_csv`], but sarcastic rows rotate through all six
/// category flags so every per-label dataset has positives.
pub fn write_official_csv_all_labels(path: &Path, rows: usize) -> usize {
    let mut content = String::from(OFFICIAL_HEADER);
    content.push('\n');
    let mut sarcastic_rows = 0;
    for index in 0..rows {
        let sarcastic = index % 3 != 2;
        let filler_a = FILLERS[index % FILLERS.len()];
        let filler_b = FILLERS[(index * 7 + 1) % FILLERS.len()];
        if sarcastic {
            let mut flags = ["0"; 6];
            flags[sarcastic_rows % 6] = "1";
            sarcastic_rows += 1;
            content.push_str(&format!(
                "{filler_a} {SENTINEL} {filler_b} marked take{index},1,plainly {filler_b} number{index},{}\n",
                flags.join(",")
            ));
        } else {
            content.push_str(&format!(
                "{filler_a} {filler_b} ordinary take{index},0,,0,0,0,0,0,0\n"
            ));
        }
    }
    fs::write(path, content).unwrap();
    sarcastic_rows
}

/// Evaluation inputs with known labels: sentinel-bearing lines are positive.
pub fn write_eval_lines(path: &Path, count: usize) -> Vec<bool> {
    let mut lines = String::new();
    let mut labels = Vec::with_capacity(count);
    for index in 0..count {
        let positive = index % 2 == 0;
        labels.push(positive);
        let filler = FILLERS[index % FILLERS.len()];
        if positive {
            lines.push_str(&format!("{filler} {SENTINEL} closing words\n"));
        } else {
            lines.push_str(&format!("{filler} entirely ordinary line\n"));
        }
    }
    fs::write(path, lines).unwrap();
    labels
}

/// Fast hyper-parameter block for test configs.
pub const FAST_HPARAMS: &str = r#"
learning_rate = 5e-3
max_seq_len = 16
batch_size = 16
epochs = 5
seed = 17
"#;

pub fn sarc_binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sarc"))
}

pub fn run_sarc(args: &[&str]) -> Output {
    sarc_binary()
        .args(args)
        .output()
        .expect("sarc binary runs")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Workspace-level location where the real task data may be dropped.
pub fn official_data_path() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.join("data/official/train.En.csv")
}
