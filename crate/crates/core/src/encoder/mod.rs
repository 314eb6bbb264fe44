//! Pluggable binary sequence classification: build, fine-tune, score, and
//! checkpoint encoder classifiers.
//!
//! Texts are normalized by the caller-supplied preprocessing config at
//! tokenize time, wrapped in start/end tokens, truncated to `max_seq_len`,
//! and classified by a bundled encoder resolved through the [`Registry`].
//! Training is mini-batch AdamW with linear warmup over the first tenth of
//! the steps, unweighted cross-entropy, and best-epoch selection by
//! validation positive-class F1 (the last epoch when no validation data is
//! given). Everything is deterministic for a fixed seed.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::hash::mix_seed;
use crate::metrics;
use crate::preprocess::{PreprocessConfig, PreprocessError, Preprocessor};

mod checkpoint;
mod model;
mod optim;
mod registry;
mod tokenizer;

pub use checkpoint::{decode_params, encode_params, CheckpointMeta, CHECKPOINT_VERSION};
pub use model::TinyArch;
pub use registry::{EncoderEntry, Registry};
pub use tokenizer::HashTokenizer;

use model::{backward, batch_loss, forward, Layout, ParamGroup};
use optim::{lr_at, AdamW};

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error("unknown encoder id {id:?}")]
    UnknownEncoder { id: String },
    #[error("max_seq_len {requested} exceeds the positional capacity {capacity} of encoder {id:?}")]
    SequenceLength {
        id: String,
        requested: usize,
        capacity: usize,
    },
    #[error("encoder {id:?} requires pretrained weights that are not available offline")]
    WeightsUnavailable { id: String },
    #[error("invalid configuration: {reason}")]
    Configuration { reason: String },
    #[error("training data error: {reason}")]
    Training { reason: String },
    #[error("decision threshold {value} outside the open interval (0, 1)")]
    Threshold { value: f64 },
    #[error("checkpoint format version {found} is newer than the supported version {supported}")]
    CheckpointVersion { found: u32, supported: u32 },
    #[error("corrupted checkpoint: {reason}")]
    CheckpointCorrupt { reason: String },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

/// Which parameters fine-tuning may update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezePolicy {
    /// Classification head, final norm, and the top two attention blocks.
    #[default]
    HeadAndLastLayers,
    /// Classification head only.
    HeadOnly,
    /// Everything, embeddings included.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub encoder_id: String,
    pub num_classes: usize,
    #[serde(default)]
    pub freeze_policy: FreezePolicy,
}

impl Default for EncoderSpec {
    fn default() -> EncoderSpec {
        EncoderSpec {
            encoder_id: "tiny".to_string(),
            num_classes: 2,
            freeze_policy: FreezePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> HyperParams {
        HyperParams {
            learning_rate: 1e-3,
            max_seq_len: 64,
            batch_size: 16,
            epochs: 5,
            seed: 17,
        }
    }
}

impl HyperParams {
    /// The four published hyper-parameter rows, by family name. The
    /// `distilbert` row carries its reported 1213-token sequence length,
    /// which no 512-capacity encoder accepts; building with it surfaces the
    /// configuration error rather than silently clamping.
    pub fn preset(name: &str) -> Option<HyperParams> {
        let (learning_rate, max_seq_len, batch_size, epochs) = match name.to_lowercase().as_str() {
            "roberta" => (2e-6, 256, 16, 10),
            "bert" => (2e-5, 128, 32, 3),
            "xlnet" => (2e-5, 128, 32, 4),
            "distilbert" => (5e-5, 1213, 16, 5),
            _ => return None,
        };
        Some(HyperParams {
            learning_rate,
            max_seq_len,
            batch_size,
            epochs,
            seed: 17,
        })
    }

    fn validate(&self) -> Result<(), EncoderError> {
        let fail = |reason: String| Err(EncoderError::Configuration { reason });
        if self.learning_rate <= 0.0 || self.learning_rate.is_nan() {
            return fail(alloc::format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if self.max_seq_len < 2 {
            return fail("max_seq_len must be at least 2 (start and end tokens)".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        Ok(())
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_f1_positive: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

/// A built (and possibly fine-tuned) classifier.
#[derive(Debug, Clone)]
pub struct ClassifierHandle {
    pub spec: EncoderSpec,
    pub hparams: HyperParams,
    arch: TinyArch,
    params: Vec<f64>,
    best_val_f1: Option<f64>,
}

/// Builds a pretrained-initialized classifier for the given spec.
pub fn build_classifier(
    registry: &Registry,
    spec: &EncoderSpec,
    hparams: &HyperParams,
) -> Result<ClassifierHandle, EncoderError> {
    hparams.validate()?;
    if spec.num_classes != 2 {
        return Err(EncoderError::Configuration {
            reason: alloc::format!(
                "num_classes {} unsupported: this artifact trains binary heads only",
                spec.num_classes
            ),
        });
    }
    let entry = registry.encoder(&spec.encoder_id)?;
    let capacity = entry.capacity();
    if hparams.max_seq_len > capacity {
        return Err(EncoderError::SequenceLength {
            id: spec.encoder_id.clone(),
            requested: hparams.max_seq_len,
            capacity,
        });
    }
    let arch = match entry {
        EncoderEntry::Builtin(arch) => *arch,
        EncoderEntry::Pretrained { .. } => {
            return Err(EncoderError::WeightsUnavailable {
                id: spec.encoder_id.clone(),
            })
        }
    };
    arch.validate()
        .map_err(|reason| EncoderError::Configuration {
            reason: reason.to_string(),
        })?;
    let layout = Layout::new(arch, spec.num_classes);
    let params = model::init_params(&layout, hparams.seed);
    Ok(ClassifierHandle {
        spec: spec.clone(),
        hparams: hparams.clone(),
        arch,
        params,
        best_val_f1: None,
    })
}

fn binary_target(instance: &crate::corpus::TextInstance) -> Result<usize, EncoderError> {
    match instance.sarcastic {
        Some(true) => Ok(1),
        Some(false) => Ok(0),
        None => Err(EncoderError::Training {
            reason: alloc::format!("instance {:?} is unlabeled", instance.id),
        }),
    }
}

impl ClassifierHandle {
    pub fn arch(&self) -> TinyArch {
        self.arch
    }

    pub fn best_val_f1(&self) -> Option<f64> {
        self.best_val_f1
    }

    pub fn tokenizer(&self) -> HashTokenizer {
        HashTokenizer::new(self.arch.vocab, "<s>", "</s>")
    }

    fn layout(&self) -> Layout {
        Layout::new(self.arch, self.spec.num_classes)
    }

    fn encode_corpus(
        &self,
        corpus: &Corpus,
        preprocessor: &Preprocessor,
    ) -> Result<(Vec<Vec<usize>>, Vec<usize>), EncoderError> {
        let tokenizer = self.tokenizer();
        let mut ids = Vec::with_capacity(corpus.len());
        let mut targets = Vec::with_capacity(corpus.len());
        for instance in corpus.iter() {
            targets.push(binary_target(instance)?);
            ids.push(tokenizer.encode(&preprocessor.run(&instance.text), self.hparams.max_seq_len));
        }
        Ok((ids, targets))
    }

    fn scores_for_ids(&self, layout: &Layout, params: &[f64], ids: &[Vec<usize>]) -> Vec<f64> {
        let mut scores = Vec::with_capacity(ids.len());
        for chunk in ids.chunks(self.hparams.batch_size.max(1)) {
            let fwd = forward(layout, params, chunk);
            scores.extend(fwd.positive_scores(self.spec.num_classes));
        }
        scores
    }

    /// Fine-tunes on `train`, selecting the best epoch by validation
    /// positive-class F1. Returns a new handle; `self` is untouched.
    pub fn fine_tune(
        &self,
        train: &Corpus,
        val: &Corpus,
        preprocess_config: &PreprocessConfig,
    ) -> Result<(ClassifierHandle, TrainHistory), EncoderError> {
        let preprocessor = Preprocessor::new(preprocess_config.clone())?;
        if train.is_empty() {
            return Err(EncoderError::Training {
                reason: "training corpus is empty".into(),
            });
        }
        let (train_ids, train_targets) = self.encode_corpus(train, &preprocessor)?;
        if train_targets.iter().all(|&t| t == 1) || train_targets.iter().all(|&t| t == 0) {
            return Err(EncoderError::Training {
                reason: "training corpus contains a single class".into(),
            });
        }
        let (val_ids, val_targets) = self.encode_corpus(val, &preprocessor)?;
        log::info!(
            "preprocess-at-tokenize: {} train + {} val texts, max_seq_len {}",
            train_ids.len(),
            val_ids.len(),
            self.hparams.max_seq_len
        );

        let mut history = TrainHistory::default();
        if self.hparams.epochs == 0 {
            return Ok((self.clone(), history));
        }

        let layout = self.layout();
        let trainable = self.trainable_ranges(&layout);
        let mut params = self.params.clone();
        let mut optimizer = AdamW::new(layout.total);

        let n = train_ids.len();
        let batch_size = self.hparams.batch_size;
        let batches_per_epoch = n.div_ceil(batch_size);
        let total_steps = (self.hparams.epochs * batches_per_epoch) as u64;
        let mut step = 0u64;

        let mut best: Option<(f64, Vec<f64>)> = None;
        for epoch in 0..self.hparams.epochs {
            let mut order: Vec<usize> = (0..n).collect();
            let tag = alloc::format!("epoch{epoch}");
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(self.hparams.seed, &tag)));

            let mut loss_sum = 0.0;
            for chunk in order.chunks(batch_size) {
                let batch_ids: Vec<Vec<usize>> =
                    chunk.iter().map(|&i| train_ids[i].clone()).collect();
                let batch_targets: Vec<usize> = chunk.iter().map(|&i| train_targets[i]).collect();

                let fwd = forward(&layout, &params, &batch_ids);
                loss_sum += batch_loss(&fwd, self.spec.num_classes, &batch_targets) * chunk.len() as f64;
                let grads = backward(&layout, &params, &fwd, &batch_targets);

                step += 1;
                let lr = lr_at(step, total_steps, self.hparams.learning_rate);
                optimizer.step(&mut params, &grads, lr, &trainable);
            }
            let train_loss = loss_sum / n as f64;

            let (val_loss, val_f1) = if val_ids.is_empty() {
                (None, None)
            } else {
                let mut loss_sum = 0.0;
                let mut scores = Vec::with_capacity(val_ids.len());
                for (chunk, targets) in val_ids
                    .chunks(batch_size)
                    .zip(val_targets.chunks(batch_size))
                {
                    let fwd = forward(&layout, &params, chunk);
                    loss_sum += batch_loss(&fwd, self.spec.num_classes, targets) * chunk.len() as f64;
                    scores.extend(fwd.positive_scores(self.spec.num_classes));
                }
                let truth: Vec<bool> = val_targets.iter().map(|&t| t == 1).collect();
                let pred: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
                let counts = metrics::confusion(&truth, &pred).expect("aligned, non-empty");
                let (_, _, f1) = metrics::prf1(&counts);
                (Some(loss_sum / val_ids.len() as f64), Some(f1))
            };

            history.records.push(EpochRecord {
                epoch,
                train_loss,
                val_loss,
                val_f1_positive: val_f1,
            });
            if let Some(f1) = val_f1 {
                let improved = best.as_ref().is_none_or(|(best_f1, _)| f1 > *best_f1);
                if improved {
                    best = Some((f1, params.clone()));
                }
            }
        }

        let (best_val_f1, final_params) = match best {
            Some((f1, params)) => (Some(f1), params),
            None => (None, params),
        };
        Ok((
            ClassifierHandle {
                spec: self.spec.clone(),
                hparams: self.hparams.clone(),
                arch: self.arch,
                params: final_params,
                best_val_f1,
            },
            history,
        ))
    }

    fn trainable_ranges(&self, layout: &Layout) -> Vec<(core::ops::Range<usize>, bool)> {
        let blocks = layout.blocks.len();
        let allowed = |group: ParamGroup| -> bool {
            match self.spec.freeze_policy {
                FreezePolicy::Full => true,
                FreezePolicy::HeadOnly => matches!(group, ParamGroup::Head),
                FreezePolicy::HeadAndLastLayers => match group {
                    ParamGroup::Head | ParamGroup::FinalNorm => true,
                    ParamGroup::Block(index) => index + 2 >= blocks,
                    ParamGroup::Embedding => false,
                },
            }
        };
        layout
            .entries()
            .into_iter()
            .filter(|entry| allowed(entry.group))
            .map(|entry| (entry.range, entry.decay))
            .collect()
    }

    /// Positive-class probability per text, order-preserving.
    pub fn predict_scores(
        &self,
        texts: &[String],
        preprocess_config: &PreprocessConfig,
    ) -> Result<Vec<f64>, EncoderError> {
        let preprocessor = Preprocessor::new(preprocess_config.clone())?;
        let tokenizer = self.tokenizer();
        let ids: Vec<Vec<usize>> = texts
            .iter()
            .map(|t| tokenizer.encode(&preprocessor.run(t), self.hparams.max_seq_len))
            .collect();
        let layout = self.layout();
        Ok(self.scores_for_ids(&layout, &self.params, &ids))
    }

    /// `score >= threshold` per text; the threshold must lie in (0, 1).
    pub fn predict_labels(
        &self,
        texts: &[String],
        preprocess_config: &PreprocessConfig,
        threshold: f64,
    ) -> Result<Vec<bool>, EncoderError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(EncoderError::Threshold { value: threshold });
        }
        Ok(self
            .predict_scores(texts, preprocess_config)?
            .into_iter()
            .map(|score| score >= threshold)
            .collect())
    }

    /// Raw parameter view; exposed for tests of the freeze policies.
    pub fn params(&self) -> &[f64] {
        &self.params
    }
}
