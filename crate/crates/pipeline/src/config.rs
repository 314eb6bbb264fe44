//! Declarative experiment configuration.
//!
//! One TOML document drives a whole run: the task kind, an output directory,
//! and exactly one task section. Unknown keys are rejected so typos surface
//! as errors instead of silently-ignored settings. Every seed defaults to
//! [`DEFAULT_SEED`] and can be overridden per section, per file, or by the
//! `--seed` flag (most specific wins: flag, then section, then file).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sarc_core::augment::AugmentConfig;
use sarc_core::corpus::adapter::{BinaryMapping, IsarcasmMapping, LabelAdapter};
use sarc_core::corpus::{CategoryLabel, Corpus, Source, SplitSpec, StratifyKey};
use sarc_core::encoder::{EncoderSpec, FreezePolicy, HyperParams};
use sarc_core::preprocess::{default_stopwords, PreprocessConfig, Step};
use sarc_core::tasks::{TaskAOptions, TaskBOptions};
use serde::Deserialize;

use crate::io;

/// The documented default seed, echoed into every run log.
pub const DEFAULT_SEED: u64 = 17;

/// Seed precedence: command-line flag, then the section's own seed, then the
/// file-level seed, then the default.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeedPolicy {
    pub cli: Option<u64>,
    pub file: Option<u64>,
}

impl SeedPolicy {
    pub fn resolve(&self, section: Option<u64>) -> u64 {
        self.cli
            .or(section)
            .or(self.file)
            .unwrap_or(DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum TaskKind {
    #[serde(alias = "a")]
    A,
    #[serde(alias = "b")]
    B,
    #[serde(alias = "c")]
    C,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::A => "A",
            TaskKind::B => "B",
            TaskKind::C => "C",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub log_level: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub task_a: Option<TaskASection>,
    #[serde(default)]
    pub task_b: Option<TaskBSection>,
    #[serde(default)]
    pub task_c: Option<TaskCSection>,
}

impl ExperimentConfig {
    /// Exactly one task section must be populated, matching `task`.
    pub fn validate(&self) -> Result<()> {
        let sections = [
            ("task_a", self.task_a.is_some()),
            ("task_b", self.task_b.is_some()),
            ("task_c", self.task_c.is_some()),
        ];
        let expected = match self.task {
            TaskKind::A => "task_a",
            TaskKind::B => "task_b",
            TaskKind::C => "task_c",
        };
        for (name, present) in sections {
            if name == expected && !present {
                bail!("config declares task = \"{}\" but section [{name}] is missing", self.task.as_str());
            }
            if name != expected && present {
                bail!(
                    "config declares task = \"{}\" but carries section [{name}]; exactly one matching section is allowed",
                    self.task.as_str()
                );
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let raw = fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    let config: ExperimentConfig =
        toml::from_str(&raw).with_context(|| format!("invalid config {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

/// One input corpus, tagged by format.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// The official delimited file (text, binary label, six flags, rephrase).
    Isarcasm {
        path: PathBuf,
        #[serde(default)]
        mapping: Option<IsarcasmMapping>,
        #[serde(default)]
        permissive: bool,
    },
    /// A binary-labeled auxiliary file through a column mapping.
    Binary {
        path: PathBuf,
        source: String,
        text_column: String,
        label_column: String,
        #[serde(default)]
        true_values: Option<Vec<String>>,
        #[serde(default)]
        false_values: Option<Vec<String>>,
        #[serde(default)]
        delimiter: Option<String>,
        #[serde(default)]
        permissive: bool,
    },
    /// The canonical interchange format.
    Jsonl { path: PathBuf },
}

fn parse_delimiter(raw: &Option<String>) -> Result<u8> {
    match raw.as_deref() {
        None => Ok(b','),
        Some("tab") | Some("\\t") | Some("\t") => Ok(b'\t'),
        Some(s) if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        Some(other) => bail!("delimiter {other:?} must be a single ASCII character or \"tab\""),
    }
}

impl SourceConfig {
    pub fn path(&self) -> &Path {
        match self {
            SourceConfig::Isarcasm { path, .. }
            | SourceConfig::Binary { path, .. }
            | SourceConfig::Jsonl { path } => path,
        }
    }

    pub fn load(&self) -> Result<Corpus> {
        match self {
            SourceConfig::Isarcasm {
                path,
                mapping,
                permissive,
            } => {
                let mapping = mapping.clone().unwrap_or_default();
                io::load_isarcasm(path, &mapping, *permissive)
            }
            SourceConfig::Binary {
                path,
                source,
                text_column,
                label_column,
                true_values,
                false_values,
                delimiter,
                permissive,
            } => {
                let source = Source::parse(source)
                    .with_context(|| format!("unknown source tag {source:?}"))?;
                let mut labels = LabelAdapter::default();
                if let Some(values) = true_values {
                    labels.true_values = values.clone();
                }
                if let Some(values) = false_values {
                    labels.false_values = values.clone();
                }
                let mapping = BinaryMapping {
                    text: text_column.clone(),
                    label: label_column.clone(),
                    labels,
                };
                io::load_binary_source(path, source, &mapping, parse_delimiter(delimiter)?, *permissive)
            }
            SourceConfig::Jsonl { path } => io::read_corpus_jsonl(path),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    #[serde(default)]
    pub encoder_id: Option<String>,
    #[serde(default)]
    pub num_classes: Option<usize>,
    #[serde(default)]
    pub freeze_policy: Option<FreezePolicy>,
}

impl EncoderSection {
    pub fn resolve(&self) -> EncoderSpec {
        let default = EncoderSpec::default();
        EncoderSpec {
            encoder_id: self.encoder_id.clone().unwrap_or(default.encoder_id),
            num_classes: self.num_classes.unwrap_or(default.num_classes),
            freeze_policy: self.freeze_policy.unwrap_or(default.freeze_policy),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParamsSection {
    /// Optional named preset (`roberta`, `bert`, `xlnet`, `distilbert`);
    /// explicit fields override preset values.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub max_seq_len: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl HyperParamsSection {
    pub fn resolve(&self, seeds: &SeedPolicy) -> Result<HyperParams> {
        let mut hparams = match &self.preset {
            Some(name) => HyperParams::preset(name)
                .with_context(|| format!("unknown hyper-parameter preset {name:?}"))?,
            None => HyperParams::default(),
        };
        if let Some(value) = self.learning_rate {
            hparams.learning_rate = value;
        }
        if let Some(value) = self.max_seq_len {
            hparams.max_seq_len = value;
        }
        if let Some(value) = self.batch_size {
            hparams.batch_size = value;
        }
        if let Some(value) = self.epochs {
            hparams.epochs = value;
        }
        hparams.seed = seeds.resolve(self.seed);
        Ok(hparams)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default)]
    pub ratios: Option<[f64; 3]>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stratify_on: Option<String>,
}

impl SplitSection {
    pub fn resolve(&self, seeds: &SeedPolicy) -> Result<SplitSpec> {
        let default = SplitSpec::default();
        let stratify_on = match &self.stratify_on {
            Some(raw) => StratifyKey::parse(raw)
                .with_context(|| format!("unknown stratification key {raw:?}"))?,
            None => default.stratify_on,
        };
        Ok(SplitSpec {
            ratios: self.ratios.unwrap_or(default.ratios),
            seed: seeds.resolve(self.seed),
            stratify_on,
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    #[serde(default)]
    pub enable_case: Option<bool>,
    #[serde(default)]
    pub enable_stopwords: Option<bool>,
    #[serde(default)]
    pub enable_clean: Option<bool>,
    /// `"builtin"` (default) or a path to a stopword list file.
    #[serde(default)]
    pub stopwords: Option<String>,
    #[serde(default)]
    pub step_order: Option<Vec<String>>,
}

impl PreprocessSection {
    pub fn resolve(&self) -> Result<PreprocessConfig> {
        let enable_case = self.enable_case.unwrap_or(true);
        let enable_stopwords = self.enable_stopwords.unwrap_or(true);
        let enable_clean = self.enable_clean.unwrap_or(true);

        let stopword_list = match self.stopwords.as_deref() {
            None | Some("builtin") => default_stopwords(),
            Some(path) => io::load_stopword_file(Path::new(path))?,
        };

        let step_order = match &self.step_order {
            Some(names) => names
                .iter()
                .map(|name| Step::parse(name).map_err(anyhow::Error::from))
                .collect::<Result<Vec<Step>>>()?,
            None => {
                // Canonical order, filtered to the enabled steps.
                let mut order = Vec::new();
                if enable_case {
                    order.push(Step::SelectiveLowercase);
                }
                if enable_clean {
                    order.push(Step::StripNoise);
                }
                if enable_stopwords {
                    order.push(Step::RemoveStopwords);
                }
                order
            }
        };

        let config = PreprocessConfig {
            enable_case,
            enable_stopwords,
            enable_clean,
            stopword_list,
            step_order,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    #[serde(default)]
    pub variants_per_input: Option<usize>,
    #[serde(default)]
    pub replace_fraction: Option<f64>,
    #[serde(default)]
    pub masker_id: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl AugmentSection {
    /// Resolution against the built-in defaults.
    pub fn resolve(&self, seeds: &SeedPolicy) -> AugmentConfig {
        let base = AugmentConfig::default();
        AugmentConfig {
            variants_per_input: self.variants_per_input.unwrap_or(base.variants_per_input),
            replace_fraction: self.replace_fraction.unwrap_or(base.replace_fraction),
            masker_id: self.masker_id.clone().unwrap_or(base.masker_id),
            seed: seeds.resolve(self.seed),
        }
    }

    /// Per-label override layered on an already-resolved base config.
    pub fn resolve_with_base(&self, base: &AugmentConfig, seeds: &SeedPolicy) -> AugmentConfig {
        AugmentConfig {
            variants_per_input: self.variants_per_input.unwrap_or(base.variants_per_input),
            replace_fraction: self.replace_fraction.unwrap_or(base.replace_fraction),
            masker_id: self.masker_id.clone().unwrap_or_else(|| base.masker_id.clone()),
            seed: match self.seed {
                Some(seed) => seeds.resolve(Some(seed)),
                None => base.seed,
            },
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskASection {
    pub sources: Vec<SourceConfig>,
    #[serde(default = "default_true")]
    pub use_rephrases: bool,
    #[serde(default)]
    pub eval_path: Option<PathBuf>,
    #[serde(default)]
    pub augment: Option<AugmentSection>,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub hparams: HyperParamsSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
}

impl TaskASection {
    pub fn resolve_options(&self, seeds: &SeedPolicy) -> Result<TaskAOptions> {
        if self.sources.is_empty() {
            bail!("task_a.sources must list at least one corpus");
        }
        let augment = self.augment.as_ref().map(|section| section.resolve(seeds));
        Ok(TaskAOptions {
            use_rephrases: self.use_rephrases,
            augment,
            spec: self.encoder.resolve(),
            hparams: self.hparams.resolve(seeds)?,
            split: self.split.resolve(seeds)?,
            preprocess: self.preprocess.resolve()?,
        })
    }

    pub fn load_corpora(&self) -> Result<Vec<Corpus>> {
        self.sources
            .iter()
            .map(|source| {
                source
                    .load()
                    .with_context(|| format!("loading {}", source.path().display()))
            })
            .collect()
    }
}

fn parse_labels(raw: &Option<Vec<String>>) -> Result<Vec<CategoryLabel>> {
    match raw {
        None => Ok(CategoryLabel::ALL.to_vec()),
        Some(names) => names
            .iter()
            .map(|name| {
                CategoryLabel::parse(name).with_context(|| format!("unknown category label {name:?}"))
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBSection {
    /// The official corpus (the sarcastic subset is used).
    pub source: SourceConfig,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    /// Labels trained without augmentation. Defaults to `["sarcasm"]`, the
    /// dominant class.
    #[serde(default)]
    pub skip_augmentation: Option<Vec<String>>,
    /// Shared augmentation settings for the remaining labels.
    #[serde(default)]
    pub augment: AugmentSection,
    /// Per-label overrides on top of the shared settings.
    #[serde(default)]
    pub augment_overrides: BTreeMap<String, AugmentSection>,
    #[serde(default)]
    pub eval_path: Option<PathBuf>,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub hparams: HyperParamsSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
}

impl TaskBSection {
    pub fn resolve_options(&self, seeds: &SeedPolicy) -> Result<TaskBOptions> {
        let labels = parse_labels(&self.labels)?;
        let skip: Vec<CategoryLabel> = match &self.skip_augmentation {
            None => vec![CategoryLabel::Sarcasm],
            Some(names) => parse_labels(&Some(names.clone()))?,
        };
        let base = self.augment.resolve(seeds);
        let mut augment = BTreeMap::new();
        for &label in &labels {
            if skip.contains(&label) {
                continue;
            }
            let config = match self.augment_overrides.get(label.name()) {
                Some(section) => section.resolve_with_base(&base, seeds),
                None => base.clone(),
            };
            augment.insert(label, config);
        }
        for name in self.augment_overrides.keys() {
            if CategoryLabel::parse(name).is_none() {
                bail!("augment_overrides names unknown label {name:?}");
            }
        }
        Ok(TaskBOptions {
            labels,
            augment,
            spec: self.encoder.resolve(),
            hparams: self.hparams.resolve(seeds)?,
            split: self.split.resolve(seeds)?,
            preprocess: self.preprocess.resolve()?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskCSection {
    pub pairs_path: PathBuf,
    #[serde(default)]
    pub gold_path: Option<PathBuf>,
    /// Reuse a trained binary classifier from a checkpoint directory...
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// ...or train one first, task-A style.
    #[serde(default)]
    pub train: Option<TaskASection>,
    #[serde(default)]
    pub preprocess: PreprocessSection,
}

impl TaskCSection {
    pub fn validate(&self) -> Result<()> {
        match (&self.checkpoint, &self.train) {
            (Some(_), Some(_)) => bail!("task_c: set either checkpoint or [task_c.train], not both"),
            (None, None) => bail!("task_c: one of checkpoint or [task_c.train] is required"),
            _ => Ok(()),
        }
    }
}

/// Reads a preprocessing section from a standalone TOML file, accepting
/// either top-level keys or a `[preprocess]` table.
pub fn load_preprocess_section(path: &Path) -> Result<PreprocessSection> {
    let raw = fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    let value: toml::Value = toml::from_str(&raw)?;
    let table = match value.get("preprocess") {
        Some(inner) => inner.clone(),
        None => value,
    };
    Ok(table.try_into()?)
}
