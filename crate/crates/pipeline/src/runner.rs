//! Executes a configured experiment end to end and writes its artifacts.
//!
//! Every run produces, inside `output_dir`: checkpoint directory(ies), a
//! training-history log (`history.jsonl`), the evaluation report
//! (`report.txt` and `report.json`), the submission file, and `run.toml`
//! with the resolved seeds and the dedup audit. If the run fails, whatever
//! partial outputs exist are moved under `failed/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sarc_core::corpus::{CategoryLabel, DedupAudit};
use sarc_core::encoder::ClassifierHandle;
use sarc_core::metrics::{evaluate_task_c, macro_f1, EvalReport};
use sarc_core::preprocess::STOPWORDS_VERSION;
use sarc_core::tasks::{
    run_task_a, run_task_c_pairwise, train_task_b_suite, TaskBSuite,
};
use serde::Serialize;

use crate::checkpoint_io::{load_checkpoint, save_checkpoint};
use crate::config::{ExperimentConfig, SeedPolicy, TaskASection, TaskKind};
use crate::io;

fn registry() -> sarc_core::encoder::Registry {
    sarc_core::encoder::Registry::default()
}

/// Serialized into `run.toml` for auditability.
#[derive(Debug, Serialize)]
struct RunLog {
    task: String,
    seed_hparams: u64,
    seed_split: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_augment: Option<u64>,
    stopwords_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    dedup: Option<DedupAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool_size: Option<usize>,
}

fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    fs::write(dir.join("report.txt"), report.to_kv_text())?;
    fs::write(dir.join("report.json"), serde_json::to_string(report)? + "\n")?;
    Ok(())
}

fn write_history(path: &Path, records: &[(Option<CategoryLabel>, &sarc_core::encoder::TrainHistory)]) -> Result<()> {
    use std::io::Write;
    let mut out = fs::File::create(path)?;
    for (label, history) in records {
        for record in &history.records {
            #[derive(Serialize)]
            struct Line<'a> {
                #[serde(skip_serializing_if = "Option::is_none")]
                label: Option<&'a str>,
                epoch: usize,
                train_loss: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                val_loss: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                val_f1_positive: Option<f64>,
            }
            let line = Line {
                label: label.map(|l| l.name()),
                epoch: record.epoch,
                train_loss: record.train_loss,
                val_loss: record.val_loss,
                val_f1_positive: record.val_f1_positive,
            };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        }
    }
    Ok(())
}

/// Runs the configured experiment. On failure the partial outputs are moved
/// into `<output_dir>/failed/` and the error is returned.
pub fn run_experiment(config: &ExperimentConfig, seeds: &SeedPolicy, output_dir: &Path) -> Result<()> {
    config.validate()?;
    fs::create_dir_all(output_dir)
        .with_context(|| format!("cannot create {}", output_dir.display()))?;

    let result = match config.task {
        TaskKind::A => run_a(config.task_a.as_ref().expect("validated"), seeds, output_dir),
        TaskKind::B => run_b(config.task_b.as_ref().expect("validated"), seeds, output_dir),
        TaskKind::C => run_c(config.task_c.as_ref().expect("validated"), seeds, output_dir),
    };

    if result.is_err() {
        quarantine_outputs(output_dir);
    }
    result
}

/// Moves everything in `output_dir` (except `failed/` itself) under
/// `failed/`.
fn quarantine_outputs(output_dir: &Path) {
    let failed = output_dir.join("failed");
    if fs::create_dir_all(&failed).is_err() {
        return;
    }
    let Ok(entries) = fs::read_dir(output_dir) else {
        return;
    };
    for entry in entries.flatten() {
        let name = entry.file_name();
        if name == "failed" {
            continue;
        }
        let target = failed.join(&name);
        let _ = fs::remove_dir_all(&target);
        let _ = fs::remove_file(&target);
        if let Err(error) = fs::rename(entry.path(), &target) {
            log::warn!("could not quarantine {:?}: {error}", name);
        }
    }
}

fn run_a(section: &TaskASection, seeds: &SeedPolicy, output_dir: &Path) -> Result<()> {
    let options = section.resolve_options(seeds)?;
    log::info!(
        "seeds: hparams={} split={}{}",
        options.hparams.seed,
        options.split.seed,
        options
            .augment
            .as_ref()
            .map(|a| format!(" augment={}", a.seed))
            .unwrap_or_default()
    );

    log::info!("ingest: {} source(s)", section.sources.len());
    let corpora = section.load_corpora()?;
    let eval_texts = match &section.eval_path {
        Some(path) => Some(io::read_lines(path)?),
        None => None,
    };

    let run = run_task_a(&corpora, eval_texts.as_deref(), &options, &registry())?;
    log::info!(
        "dedup audit: raw {} kept {} removed {}",
        run.dedup.raw,
        run.dedup.kept,
        run.dedup.removed
    );

    save_checkpoint(&run.handle, &output_dir.join("checkpoint"))?;
    write_history(&output_dir.join("history.jsonl"), &[(None, &run.history)])?;
    write_report(output_dir, &run.report)?;
    if eval_texts.is_some() {
        io::write_submission_a(&output_dir.join("submission.txt"), &run.predictions)?;
    }

    let log_record = RunLog {
        task: "A".into(),
        seed_hparams: options.hparams.seed,
        seed_split: options.split.seed,
        seed_augment: options.augment.as_ref().map(|a| a.seed),
        stopwords_version: STOPWORDS_VERSION.into(),
        dedup: Some(run.dedup),
        pool_size: Some(run.pool_size),
    };
    fs::write(output_dir.join("run.toml"), toml::to_string_pretty(&log_record)?)?;
    Ok(())
}

/// Builds the suite-level report for the six per-label models: per-class F1
/// on each label's own test split, their macro mean, and headline fields
/// averaged over the labels.
fn suite_report(suite: &TaskBSuite) -> Result<EvalReport> {
    let per_class: Vec<f64> = suite.models.iter().map(|m| m.report.f1_positive).collect();
    let macro_value = macro_f1(&per_class)?;
    let mean = |extract: fn(&EvalReport) -> f64| -> f64 {
        suite.models.iter().map(|m| extract(&m.report)).sum::<f64>() / suite.models.len() as f64
    };
    Ok(EvalReport {
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        accuracy: mean(|r| r.accuracy),
        f1_positive: mean(|r| r.f1_positive),
        per_class_f1: Some(per_class),
        macro_f1: Some(macro_value),
        n: suite.models.iter().map(|m| m.report.n).sum(),
    })
}

fn run_b(section: &crate::config::TaskBSection, seeds: &SeedPolicy, output_dir: &Path) -> Result<()> {
    let options = section.resolve_options(seeds)?;
    log::info!(
        "seeds: hparams={} split={}",
        options.hparams.seed,
        options.split.seed
    );

    let official = section
        .source
        .load()
        .with_context(|| format!("loading {}", section.source.path().display()))?;
    let suite = train_task_b_suite(&official, &options, &registry())?;

    for model in &suite.models {
        save_checkpoint(
            &model.handle,
            &output_dir.join("checkpoints").join(model.label.name()),
        )?;
        log::info!(
            "label {}: dataset {} + {} augmented, test f1_positive {:.4}",
            model.label,
            model.base_size,
            model.augmented_size,
            model.report.f1_positive
        );
    }
    let histories: Vec<(Option<CategoryLabel>, &sarc_core::encoder::TrainHistory)> = suite
        .models
        .iter()
        .map(|m| (Some(m.label), &m.history))
        .collect();
    write_history(&output_dir.join("history.jsonl"), &histories)?;
    write_report(output_dir, &suite_report(&suite)?)?;

    if let Some(eval_path) = &section.eval_path {
        let texts = io::read_lines(eval_path)?;
        let merged = suite.predict(&texts, &options.preprocess)?;
        io::write_submission_b(&output_dir.join("submission.csv"), &merged)?;
    }

    let log_record = RunLog {
        task: "B".into(),
        seed_hparams: options.hparams.seed,
        seed_split: options.split.seed,
        seed_augment: options.augment.values().next().map(|a| a.seed),
        stopwords_version: STOPWORDS_VERSION.into(),
        dedup: None,
        pool_size: None,
    };
    fs::write(output_dir.join("run.toml"), toml::to_string_pretty(&log_record)?)?;
    Ok(())
}

fn run_c(section: &crate::config::TaskCSection, seeds: &SeedPolicy, output_dir: &Path) -> Result<()> {
    section.validate()?;
    let preprocess = section.preprocess.resolve()?;
    let pairs = io::read_pairs(&section.pairs_path)?;

    let handle: ClassifierHandle = match (&section.checkpoint, &section.train) {
        (Some(path), None) => load_checkpoint(path)?,
        (None, Some(train)) => {
            let options = train.resolve_options(seeds)?;
            let corpora = train.load_corpora()?;
            let run = run_task_a(&corpora, None, &options, &registry())?;
            save_checkpoint(&run.handle, &output_dir.join("checkpoint"))?;
            write_history(&output_dir.join("history.jsonl"), &[(None, &run.history)])?;
            run.handle
        }
        _ => bail!("task_c: one of checkpoint or [task_c.train] is required"),
    };

    let decisions = run_task_c_pairwise(&handle, &pairs, &preprocess)?;
    io::write_submission_c(&output_dir.join("submission.txt"), &decisions)?;

    if let Some(gold_path) = &section.gold_path {
        let gold = io::read_binary_lines(gold_path)?;
        if gold.len() != decisions.len() {
            bail!(
                "gold file has {} rows but {} pairs were scored",
                gold.len(),
                decisions.len()
            );
        }
        let report = evaluate_task_c(&gold, &decisions)?;
        write_report(output_dir, &report)?;
        log::info!("pair accuracy {:.4}", report.accuracy);
    }

    let log_record = RunLog {
        task: "C".into(),
        seed_hparams: seeds.resolve(None),
        seed_split: seeds.resolve(None),
        seed_augment: None,
        stopwords_version: STOPWORDS_VERSION.into(),
        dedup: None,
        pool_size: None,
    };
    fs::write(output_dir.join("run.toml"), toml::to_string_pretty(&log_record)?)?;
    Ok(())
}

/// Resolved output directory: the `--output-dir` flag wins over the config.
pub fn resolve_output_dir(config: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone())
}

/// Map of per-label boolean predictions for external callers (tests).
pub fn suite_predictions(
    suite: &TaskBSuite,
    texts: &[String],
    preprocess: &sarc_core::preprocess::PreprocessConfig,
) -> Result<BTreeMap<CategoryLabel, Vec<bool>>> {
    let mut map = BTreeMap::new();
    for model in &suite.models {
        map.insert(model.label, model.handle.predict_labels(texts, preprocess, 0.5)?);
    }
    Ok(map)
}
