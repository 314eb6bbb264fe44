//! Corpus types and dataset-assembly operations.
//!
//! A [`Corpus`] is an ordered collection of validated [`TextInstance`]s with
//! unique ids. The operations here are pure: merging with exact-duplicate
//! elimination, injecting author rephrases as non-sarcastic instances,
//! building per-label binary datasets, stratified splitting, and label
//! statistics. Loading from files lives in the pipeline crate; the column
//! mappings it uses are in [`adapter`].

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub mod adapter;
mod split;
mod stats;

pub use split::{stratified_split, SplitSpec, StratifyKey};
pub use stats::{label_stats, LabelStats};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("required column {column:?} not found in header")]
    MissingColumn { column: String },
    #[error("row {row}: {reason}")]
    RowValidation { row: usize, reason: String },
    #[error("instance {id:?}: {reason}")]
    InvalidInstance { id: String, reason: String },
    #[error("duplicate instance id {id:?}")]
    DuplicateId { id: String },
    #[error("split ratios {ratios:?} must each lie in [0, 1] and sum to 1")]
    InvalidSplitSpec { ratios: [f64; 3] },
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("dataset for label {label} has no positive instances")]
    NoPositives { label: CategoryLabel },
    #[error("precondition violated: {reason}")]
    Precondition { reason: String },
}

/// Where an instance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Isarcasm,
    Semeval18Train,
    Semeval18Test,
    Mustard,
    Figlang20,
    Augmented,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::Isarcasm,
        Source::Semeval18Train,
        Source::Semeval18Test,
        Source::Mustard,
        Source::Figlang20,
        Source::Augmented,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Isarcasm => "ISARCASM",
            Source::Semeval18Train => "SEMEVAL18_TRAIN",
            Source::Semeval18Test => "SEMEVAL18_TEST",
            Source::Mustard => "MUSTARD",
            Source::Figlang20 => "FIGLANG20",
            Source::Augmented => "AUGMENTED",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        Source::ALL.iter().copied().find(|v| {
            v.as_str().eq_ignore_ascii_case(s)
                || v.as_str().replace('_', "-").eq_ignore_ascii_case(s)
        })
    }

    /// Lowercase tag used when generating instance ids.
    pub fn id_prefix(self) -> &'static str {
        match self {
            Source::Isarcasm => "isarcasm",
            Source::Semeval18Train => "semeval18-train",
            Source::Semeval18Test => "semeval18-test",
            Source::Mustard => "mustard",
            Source::Figlang20 => "figlang20",
            Source::Augmented => "augmented",
        }
    }
}

/// The six ironic-speech categories, in the fixed order used everywhere:
/// stats keys, dataset columns, and submission headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryLabel {
    Sarcasm,
    Irony,
    Satire,
    Understatement,
    Overstatement,
    RhetoricalQuestion,
}

impl CategoryLabel {
    pub const ALL: [CategoryLabel; 6] = [
        CategoryLabel::Sarcasm,
        CategoryLabel::Irony,
        CategoryLabel::Satire,
        CategoryLabel::Understatement,
        CategoryLabel::Overstatement,
        CategoryLabel::RhetoricalQuestion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CategoryLabel::Sarcasm => "sarcasm",
            CategoryLabel::Irony => "irony",
            CategoryLabel::Satire => "satire",
            CategoryLabel::Understatement => "understatement",
            CategoryLabel::Overstatement => "overstatement",
            CategoryLabel::RhetoricalQuestion => "rhetorical_question",
        }
    }

    /// Human-readable name (spaces instead of underscores).
    pub fn display_name(self) -> &'static str {
        match self {
            CategoryLabel::RhetoricalQuestion => "rhetorical question",
            other => other.name(),
        }
    }

    pub fn parse(s: &str) -> Option<CategoryLabel> {
        let folded = s.trim().to_lowercase().replace([' ', '-'], "_");
        CategoryLabel::ALL.iter().copied().find(|l| l.name() == folded)
    }
}

impl core::fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// One boolean per ironic-speech category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CategoryFlags {
    #[serde(default)]
    pub sarcasm: bool,
    #[serde(default)]
    pub irony: bool,
    #[serde(default)]
    pub satire: bool,
    #[serde(default)]
    pub understatement: bool,
    #[serde(default)]
    pub overstatement: bool,
    #[serde(default)]
    pub rhetorical_question: bool,
}

impl CategoryFlags {
    pub fn get(&self, label: CategoryLabel) -> bool {
        match label {
            CategoryLabel::Sarcasm => self.sarcasm,
            CategoryLabel::Irony => self.irony,
            CategoryLabel::Satire => self.satire,
            CategoryLabel::Understatement => self.understatement,
            CategoryLabel::Overstatement => self.overstatement,
            CategoryLabel::RhetoricalQuestion => self.rhetorical_question,
        }
    }

    pub fn set(&mut self, label: CategoryLabel, value: bool) {
        match label {
            CategoryLabel::Sarcasm => self.sarcasm = value,
            CategoryLabel::Irony => self.irony = value,
            CategoryLabel::Satire => self.satire = value,
            CategoryLabel::Understatement => self.understatement = value,
            CategoryLabel::Overstatement => self.overstatement = value,
            CategoryLabel::RhetoricalQuestion => self.rhetorical_question = value,
        }
    }

    /// Flags with exactly one label set.
    pub fn only(label: CategoryLabel) -> CategoryFlags {
        let mut flags = CategoryFlags::default();
        flags.set(label, true);
        flags
    }

    pub fn any(&self) -> bool {
        CategoryLabel::ALL.iter().any(|&l| self.get(l))
    }

    /// Labels set, in the fixed order.
    pub fn set_labels(&self) -> Vec<CategoryLabel> {
        CategoryLabel::ALL
            .iter()
            .copied()
            .filter(|&l| self.get(l))
            .collect()
    }

    pub fn as_array(&self) -> [bool; 6] {
        [
            self.sarcasm,
            self.irony,
            self.satire,
            self.understatement,
            self.overstatement,
            self.rhetorical_question,
        ]
    }
}

/// One tweet or utterance.
///
/// Invariants (checked by [`TextInstance::validate`] and enforced whenever a
/// corpus is built from untrusted rows):
/// - a non-sarcastic instance carries no category flags,
/// - a rephrase is only present on sarcastic instances,
/// - the text is non-empty after trimming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextInstance {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sarcastic: Option<bool>,
    #[serde(default)]
    pub category_flags: CategoryFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rephrase: Option<String>,
    pub source: Source,
}

impl TextInstance {
    /// An unlabeled instance.
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: Source) -> TextInstance {
        TextInstance {
            id: id.into(),
            text: text.into(),
            sarcastic: None,
            category_flags: CategoryFlags::default(),
            rephrase: None,
            source,
        }
    }

    /// A binary-labeled instance with no category flags or rephrase.
    pub fn binary(
        id: impl Into<String>,
        text: impl Into<String>,
        sarcastic: bool,
        source: Source,
    ) -> TextInstance {
        TextInstance {
            sarcastic: Some(sarcastic),
            ..TextInstance::new(id, text, source)
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |reason: &str| {
            Err(CorpusError::InvalidInstance {
                id: self.id.clone(),
                reason: reason.to_owned(),
            })
        };
        if self.text.trim().is_empty() {
            return fail("text is empty after trimming");
        }
        if self.sarcastic == Some(false) && self.category_flags.any() {
            return fail("non-sarcastic instance carries category flags");
        }
        if self.rephrase.is_some() && self.sarcastic != Some(true) {
            return fail("rephrase present on a non-sarcastic instance");
        }
        Ok(())
    }

    pub fn dedup_key(&self) -> String {
        dedup_key(&self.text)
    }
}

/// The key under which exact duplicates are detected: NFC-normalized,
/// case-folded, whitespace-collapsed text.
pub fn dedup_key(text: &str) -> String {
    let normalized: String = text.nfc().collect();
    let lowered = normalized.to_lowercase();
    let mut key = String::with_capacity(lowered.len());
    for token in lowered.split_whitespace() {
        if !key.is_empty() {
            key.push(' ');
        }
        key.push_str(token);
    }
    key
}

/// Ordered collection of instances with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub instances: Vec<TextInstance>,
}

impl Corpus {
    pub fn new(name: impl Into<String>) -> Corpus {
        Corpus {
            name: name.into(),
            instances: Vec::new(),
        }
    }

    /// Builds a corpus, validating every instance and id uniqueness.
    pub fn validated(
        name: impl Into<String>,
        instances: Vec<TextInstance>,
    ) -> Result<Corpus, CorpusError> {
        let mut seen = BTreeSet::new();
        for instance in &instances {
            instance.validate()?;
            if !seen.insert(instance.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    id: instance.id.clone(),
                });
            }
        }
        Ok(Corpus {
            name: name.into(),
            instances,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, TextInstance> {
        self.instances.iter()
    }

    /// Instances satisfying a predicate, as a new corpus.
    pub fn filtered(&self, name: impl Into<String>, keep: impl Fn(&TextInstance) -> bool) -> Corpus {
        Corpus {
            name: name.into(),
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
        }
    }
}

/// What a merge did, for run logs and the dedup audit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupAudit {
    pub raw: usize,
    pub kept: usize,
    pub removed: usize,
}

/// Concatenates corpora in argument order, dropping every instance whose
/// dedup key was already seen (first occurrence wins). Ids colliding across
/// corpora are qualified with the owning corpus name.
pub fn merge_dedup(corpora: &[Corpus]) -> Corpus {
    merge_dedup_audited(corpora, "merged").0
}

pub fn merge_dedup_audited(corpora: &[Corpus], name: &str) -> (Corpus, DedupAudit) {
    let mut seen_keys: BTreeSet<String> = BTreeSet::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    let mut merged = Corpus::new(name);
    let mut audit = DedupAudit::default();

    for corpus in corpora {
        for instance in &corpus.instances {
            audit.raw += 1;
            if !seen_keys.insert(instance.dedup_key()) {
                audit.removed += 1;
                continue;
            }
            let mut instance = instance.clone();
            if seen_ids.contains(&instance.id) {
                let mut candidate = format!("{}:{}", corpus.name, instance.id);
                let mut n = 1usize;
                while seen_ids.contains(&candidate) {
                    candidate = format!("{}:{}#{}", corpus.name, instance.id, n);
                    n += 1;
                }
                log::warn!(
                    "merge: id {:?} already present, renamed to {:?}",
                    instance.id,
                    candidate
                );
                instance.id = candidate;
            }
            seen_ids.insert(instance.id.clone());
            merged.instances.push(instance);
        }
    }
    audit.kept = merged.len();
    (merged, audit)
}

/// Appends, for every instance carrying a rephrase, a new non-sarcastic
/// instance holding the rephrase text. Rephrases whose dedup key already
/// exists in the corpus (or was injected earlier in the pass) are skipped.
/// Existing instances are never modified.
pub fn inject_rephrases(corpus: &Corpus) -> Corpus {
    let mut seen: BTreeSet<String> = corpus.iter().map(|i| i.dedup_key()).collect();
    let mut ids: BTreeSet<String> = corpus.iter().map(|i| i.id.clone()).collect();
    let mut out = corpus.clone();

    for instance in &corpus.instances {
        let Some(rephrase) = &instance.rephrase else {
            continue;
        };
        if rephrase.trim().is_empty() {
            continue;
        }
        if !seen.insert(dedup_key(rephrase)) {
            continue;
        }
        let mut id = format!("{}-rephrase", instance.id);
        let mut n = 1usize;
        while ids.contains(&id) {
            id = format!("{}-rephrase#{}", instance.id, n);
            n += 1;
        }
        ids.insert(id.clone());
        out.instances
            .push(TextInstance::binary(id, rephrase.clone(), false, instance.source));
    }
    out
}

/// Builds the binary dataset for one category label: positives are the
/// label-flagged instances of the sarcastic base corpus plus every augmented
/// instance; negatives are the remaining base instances. The six-way flags
/// collapse to the single label.
pub fn build_label_dataset(
    sarcastic_corpus: &Corpus,
    label: CategoryLabel,
    augmented: &Corpus,
) -> Result<Corpus, CorpusError> {
    for instance in sarcastic_corpus.iter() {
        if instance.sarcastic != Some(true) {
            return Err(CorpusError::Precondition {
                reason: format!(
                    "base corpus for label {label} contains non-sarcastic instance {:?}",
                    instance.id
                ),
            });
        }
    }
    for instance in augmented.iter() {
        if !instance.category_flags.get(label) {
            return Err(CorpusError::Precondition {
                reason: format!(
                    "augmented instance {:?} is not flagged with {label}",
                    instance.id
                ),
            });
        }
    }

    let mut instances = Vec::with_capacity(sarcastic_corpus.len() + augmented.len());
    let mut ids = BTreeSet::new();
    let mut push = |base: &TextInstance, positive: bool, ids: &mut BTreeSet<String>| {
        let mut id = base.id.clone();
        let mut n = 1usize;
        while ids.contains(&id) {
            id = format!("{}#{}", base.id, n);
            n += 1;
        }
        ids.insert(id.clone());
        instances.push(TextInstance {
            id,
            text: base.text.clone(),
            sarcastic: Some(positive),
            category_flags: if positive {
                CategoryFlags::only(label)
            } else {
                CategoryFlags::default()
            },
            rephrase: None,
            source: base.source,
        });
    };

    let mut positives = 0usize;
    for instance in sarcastic_corpus.iter() {
        let positive = instance.category_flags.get(label);
        positives += positive as usize;
        push(instance, positive, &mut ids);
    }
    for instance in augmented.iter() {
        positives += 1;
        push(instance, true, &mut ids);
    }

    if positives == 0 {
        return Err(CorpusError::NoPositives { label });
    }
    Ok(Corpus {
        name: format!("label-{}", label.name()),
        instances,
    })
}
