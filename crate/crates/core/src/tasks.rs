//! End-to-end orchestration of the three task formulations over in-memory
//! corpora. The pipeline crate resolves files and configs, then calls these.
//!
//! The composition order for binary detection is fixed and logged: ingest →
//! merge/dedup → rephrase-inject → augment → split → preprocess-at-tokenize
//! → train → predict. The multi-label task trains six independent binary
//! classifiers (one per category, binary relevance) whose per-text outputs
//! are merged into six-flag predictions. Pair selection applies one shared
//! binary classifier to both texts of each pair and picks the higher
//! positive-class score, first text on ties.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::{augment_corpus, AugmentConfig, AugmentError};
use crate::corpus::{
    build_label_dataset, inject_rephrases, merge_dedup_audited, stratified_split, CategoryFlags,
    CategoryLabel, Corpus, CorpusError, DedupAudit, Source, SplitSpec,
};
use crate::encoder::{
    build_classifier, ClassifierHandle, EncoderError, EncoderSpec, HyperParams, Registry,
    TrainHistory,
};
use crate::metrics::{evaluate_task_a, EvalReport, MetricError};
use crate::preprocess::PreprocessConfig;

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("labels must be the six category names in canonical order, got {got:?}")]
    LabelSet { got: Vec<String> },
    #[error("cannot merge per-label predictions: {reason}")]
    Merge { reason: String },
    #[error("pair {index}: {slot} text is empty")]
    EmptyPairText { index: usize, slot: &'static str },
}

/// Six flags assembled from the per-label classifiers, in fixed label order.
/// All-false is a valid prediction ("none of the categories").
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiLabelPrediction {
    pub flags: CategoryFlags,
}

impl MultiLabelPrediction {
    pub fn from_flags(flags: CategoryFlags) -> MultiLabelPrediction {
        MultiLabelPrediction { flags }
    }

    pub fn as_array(&self) -> [bool; 6] {
        self.flags.as_array()
    }
}

/// Outcome of scoring one text pair. `chosen_index` is 0 exactly when
/// `score_0 >= score_1` (ties pick the first text).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub chosen_index: u8,
    pub score_0: f64,
    pub score_1: f64,
}

impl PairDecision {
    pub fn new(score_0: f64, score_1: f64) -> PairDecision {
        PairDecision {
            chosen_index: u8::from(score_0 < score_1),
            score_0,
            score_1,
        }
    }
}

/// The argmax-with-tie rule on its own, reusable against stub scorers.
pub fn decide_pair(score_0: f64, score_1: f64) -> PairDecision {
    PairDecision::new(score_0, score_1)
}

/// Options for a binary-detection run over already-loaded corpora.
#[derive(Debug, Clone)]
pub struct TaskAOptions {
    pub use_rephrases: bool,
    pub augment: Option<AugmentConfig>,
    pub spec: EncoderSpec,
    pub hparams: HyperParams,
    pub split: SplitSpec,
    pub preprocess: PreprocessConfig,
}

impl Default for TaskAOptions {
    fn default() -> TaskAOptions {
        TaskAOptions {
            use_rephrases: true,
            augment: None,
            spec: EncoderSpec::default(),
            hparams: HyperParams::default(),
            split: SplitSpec::default(),
            preprocess: PreprocessConfig::default(),
        }
    }
}

/// Everything a binary-detection run produces.
#[derive(Debug)]
pub struct TaskARun {
    pub handle: ClassifierHandle,
    pub history: TrainHistory,
    /// Labels for the evaluation texts, when any were supplied.
    pub predictions: Vec<bool>,
    /// Report on the held-out test split.
    pub report: EvalReport,
    pub dedup: DedupAudit,
    /// Training-pool size after rephrase injection and augmentation.
    pub pool_size: usize,
}

/// Runs binary detection end to end: merge, inject rephrases, augment,
/// split, fine-tune, predict on the evaluation texts, and evaluate on the
/// held-out test split.
pub fn run_task_a(
    corpora: &[Corpus],
    eval_texts: Option<&[String]>,
    options: &TaskAOptions,
    registry: &Registry,
) -> Result<TaskARun, TaskError> {
    let (mut pool, dedup) = merge_dedup_audited(corpora, "task-a-pool");
    log::info!(
        "merge/dedup: raw {} kept {} removed {}",
        dedup.raw,
        dedup.kept,
        dedup.removed
    );

    if options.use_rephrases {
        let before = pool.len();
        pool = inject_rephrases(&pool);
        log::info!("rephrase-inject: +{}", pool.len() - before);
    }

    if let Some(augment) = &options.augment {
        let masker = registry.masker(&augment.masker_id)?;
        let sources = pool.filtered("augment-base", |i| {
            i.sarcastic == Some(true) && i.source == Source::Isarcasm
        });
        let synthetic = augment_corpus(&sources, None, augment, masker.as_ref())?;
        log::info!("augment: +{} from {} inputs", synthetic.len(), sources.len());
        let (merged, _) = merge_dedup_audited(&[pool, synthetic], "task-a-pool");
        pool = merged;
    }

    let pool_size = pool.len();
    let (train, val, test) = stratified_split(&pool, &options.split)?;
    log::info!(
        "split: train {} val {} test {}",
        train.len(),
        val.len(),
        test.len()
    );

    let handle = build_classifier(registry, &options.spec, &options.hparams)?;
    let (tuned, history) = handle.fine_tune(&train, &val, &options.preprocess)?;
    log::info!("train: {} epochs", history.records.len());

    let predictions = match eval_texts {
        Some(texts) => tuned.predict_labels(texts, &options.preprocess, 0.5)?,
        None => Vec::new(),
    };

    let test_texts: Vec<String> = test.iter().map(|i| i.text.clone()).collect();
    let test_truth: Vec<bool> = test
        .iter()
        .map(|i| i.sarcastic == Some(true))
        .collect();
    let test_pred = tuned.predict_labels(&test_texts, &options.preprocess, 0.5)?;
    let report = evaluate_task_a(&test_truth, &test_pred)?;
    log::info!("predict: {} eval, test f1_positive {:.4}", predictions.len(), report.f1_positive);

    Ok(TaskARun {
        handle: tuned,
        history,
        predictions,
        report,
        dedup,
        pool_size,
    })
}

/// Options for the six-classifier multi-label suite.
#[derive(Debug, Clone)]
pub struct TaskBOptions {
    /// Must be the six category names in canonical order.
    pub labels: Vec<CategoryLabel>,
    /// Per-label augmentation; a missing entry means no augmentation for
    /// that label.
    pub augment: BTreeMap<CategoryLabel, AugmentConfig>,
    pub spec: EncoderSpec,
    pub hparams: HyperParams,
    pub split: SplitSpec,
    pub preprocess: PreprocessConfig,
}

impl Default for TaskBOptions {
    fn default() -> TaskBOptions {
        // Default augmentation plan: three variants for every label except
        // the dominant one (sarcasm), which gets none.
        let mut augment = BTreeMap::new();
        for label in CategoryLabel::ALL {
            if label != CategoryLabel::Sarcasm {
                augment.insert(label, AugmentConfig::default());
            }
        }
        TaskBOptions {
            labels: CategoryLabel::ALL.to_vec(),
            augment,
            spec: EncoderSpec::default(),
            hparams: HyperParams::default(),
            split: SplitSpec::default(),
            preprocess: PreprocessConfig::default(),
        }
    }
}

impl TaskBOptions {
    fn validate(&self) -> Result<(), TaskError> {
        if self.labels != CategoryLabel::ALL {
            return Err(TaskError::LabelSet {
                got: self.labels.iter().map(|l| String::from(l.name())).collect(),
            });
        }
        Ok(())
    }
}

/// One trained per-label model with its dataset accounting.
#[derive(Debug)]
pub struct TaskBModel {
    pub label: CategoryLabel,
    pub handle: ClassifierHandle,
    pub history: TrainHistory,
    /// Report on this label's held-out test split.
    pub report: EvalReport,
    pub base_size: usize,
    pub augmented_size: usize,
}

/// The six per-label models, in canonical label order.
#[derive(Debug)]
pub struct TaskBSuite {
    pub models: Vec<TaskBModel>,
}

impl TaskBSuite {
    pub fn model(&self, label: CategoryLabel) -> &TaskBModel {
        self.models
            .iter()
            .find(|m| m.label == label)
            .expect("suite holds all six labels")
    }

    /// Per-label predictions merged into six-flag rows.
    pub fn predict(
        &self,
        texts: &[String],
        preprocess: &PreprocessConfig,
    ) -> Result<Vec<MultiLabelPrediction>, TaskError> {
        let mut per_label = BTreeMap::new();
        for model in &self.models {
            let labels = model.handle.predict_labels(texts, preprocess, 0.5)?;
            per_label.insert(model.label, labels);
        }
        merge_task_b_predictions(&per_label)
    }
}

/// Trains the six per-label binary classifiers from the official corpus
/// (its sarcastic subset): one dataset, split, and fine-tune per label.
pub fn train_task_b_suite(
    official: &Corpus,
    options: &TaskBOptions,
    registry: &Registry,
) -> Result<TaskBSuite, TaskError> {
    options.validate()?;
    let base = official.filtered("official-sarcastic", |i| i.sarcastic == Some(true));
    log::info!(
        "task-b base: {} sarcastic instances of {}",
        base.len(),
        official.len()
    );

    let mut models = Vec::with_capacity(6);
    for &label in &options.labels {
        let augmented = match options.augment.get(&label) {
            Some(config) => {
                let masker = registry.masker(&config.masker_id)?;
                augment_corpus(&base, Some(label), config, masker.as_ref())?
            }
            None => Corpus::new(format!("{}-augmented", label.name())),
        };
        let dataset = build_label_dataset(&base, label, &augmented)?;
        log::info!(
            "task-b {label}: dataset {} ({} base + {} augmented)",
            dataset.len(),
            base.len(),
            augmented.len()
        );

        // Stratify on the collapsed label so small positive classes stay
        // proportionally represented.
        let split = SplitSpec {
            stratify_on: crate::corpus::StratifyKey::Sarcastic,
            ..options.split.clone()
        };
        let (train, val, test) = stratified_split(&dataset, &split)?;
        let handle = build_classifier(registry, &options.spec, &options.hparams)?;
        let (tuned, history) = handle.fine_tune(&train, &val, &options.preprocess)?;

        let test_texts: Vec<String> = test.iter().map(|i| i.text.clone()).collect();
        let test_truth: Vec<bool> = test.iter().map(|i| i.sarcastic == Some(true)).collect();
        let test_pred = tuned.predict_labels(&test_texts, &options.preprocess, 0.5)?;
        let report = evaluate_task_a(&test_truth, &test_pred)?;

        models.push(TaskBModel {
            label,
            handle: tuned,
            history,
            report,
            base_size: base.len(),
            augmented_size: augmented.len(),
        });
    }
    Ok(TaskBSuite { models })
}

/// Assembles per-label boolean columns into six-flag predictions. All six
/// labels must be present with equal lengths.
pub fn merge_task_b_predictions(
    per_label: &BTreeMap<CategoryLabel, Vec<bool>>,
) -> Result<Vec<MultiLabelPrediction>, TaskError> {
    for label in CategoryLabel::ALL {
        if !per_label.contains_key(&label) {
            return Err(TaskError::Merge {
                reason: format!("missing predictions for label {label}"),
            });
        }
    }
    let n = per_label[&CategoryLabel::Sarcasm].len();
    for (label, column) in per_label {
        if column.len() != n {
            return Err(TaskError::Merge {
                reason: format!(
                    "label {label} has {} predictions, expected {n}",
                    column.len()
                ),
            });
        }
    }
    let mut merged = vec![MultiLabelPrediction::default(); n];
    for label in CategoryLabel::ALL {
        for (prediction, &value) in merged.iter_mut().zip(&per_label[&label]) {
            prediction.flags.set(label, value);
        }
    }
    Ok(merged)
}

/// Scores both texts of each pair with the same classifier and picks the
/// higher positive-class score (ties choose the first text).
pub fn run_task_c_pairwise(
    handle: &ClassifierHandle,
    pairs: &[(String, String)],
    preprocess: &PreprocessConfig,
) -> Result<Vec<PairDecision>, TaskError> {
    for (index, (first, second)) in pairs.iter().enumerate() {
        if first.trim().is_empty() {
            return Err(TaskError::EmptyPairText { index, slot: "first" });
        }
        if second.trim().is_empty() {
            return Err(TaskError::EmptyPairText { index, slot: "second" });
        }
    }
    let mut texts = Vec::with_capacity(pairs.len() * 2);
    for (first, second) in pairs {
        texts.push(first.clone());
        texts.push(second.clone());
    }
    let scores = handle.predict_scores(&texts, preprocess)?;
    Ok(scores
        .chunks_exact(2)
        .map(|pair| decide_pair(pair[0], pair[1]))
        .collect())
}
