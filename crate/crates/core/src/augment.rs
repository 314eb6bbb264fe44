//! Synthetic-variant generation by contextual word replacement.
//!
//! Each input yields a fixed number of variants; a variant replaces a seeded
//! random subset of the maskable tokens (whole-word alphabetic tokens) with
//! candidates proposed by a [`Masker`], sampled from the top five and never
//! equal to the original token, so every variant differs from its parent.
//! Determinism is per instance: the generator is seeded from the run seed
//! mixed with the instance id and the variant index, so processing order
//! (or parallelism) cannot change the output.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{dedup_key, CategoryLabel, Corpus, Source, TextInstance};
use crate::hash::{fnv1a64, mix_seed};

/// Candidates are drawn from the top `TOP_K` masker proposals.
const TOP_K: usize = 5;

/// A colliding variant is redrawn at most this many times before being kept.
const MAX_REDRAWS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid augmentation config: {reason}")]
    InvalidConfig { reason: String },
    #[error("masker {id:?} requires pretrained weights that are not available offline")]
    MaskerUnavailable { id: String },
    #[error("unknown masker id {id:?}")]
    UnknownMasker { id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub variants_per_input: usize,
    pub replace_fraction: f64,
    pub masker_id: String,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> AugmentConfig {
        AugmentConfig {
            variants_per_input: 3,
            replace_fraction: 0.3,
            masker_id: "table".to_string(),
            seed: 17,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.variants_per_input < 1 {
            return Err(AugmentError::InvalidConfig {
                reason: "variants_per_input must be at least 1".to_owned(),
            });
        }
        if !(self.replace_fraction > 0.0 && self.replace_fraction <= 1.0) {
            return Err(AugmentError::InvalidConfig {
                reason: format!(
                    "replace_fraction {} outside (0, 1]",
                    self.replace_fraction
                ),
            });
        }
        Ok(())
    }
}

/// Proposes scored replacement candidates for one masked position.
pub trait Masker {
    /// Up to `k` candidates for `tokens[index]`, best first. May include the
    /// original token; the caller filters it out.
    fn candidates(&self, tokens: &[&str], index: usize, k: usize) -> Vec<(String, f64)>;
}

/// Deterministic lookup-table masker.
///
/// Known words map to a fixed candidate list; unknown words fall back to a
/// bundled pool of common content words, indexed by a hash of the original
/// token so the proposals stay stable. Exists so the whole augmentation
/// path is testable without any pretrained model.
#[derive(Debug, Clone, Default)]
pub struct TableMasker {
    table: BTreeMap<String, Vec<String>>,
}

/// Fallback candidate pool for words missing from the table.
const FALLBACK_POOL: [&str; 64] = [
    "time", "people", "way", "day", "thing", "world", "life", "hand", "part", "child", "eye",
    "woman", "place", "work", "week", "case", "point", "company", "number", "group", "problem",
    "fact", "good", "new", "first", "last", "long", "great", "little", "other", "old", "right",
    "big", "high", "different", "small", "large", "next", "early", "young", "important", "few",
    "public", "bad", "same", "able", "make", "take", "come", "see", "know", "get", "give", "find",
    "think", "tell", "show", "leave", "feel", "put", "bring", "begin", "keep", "hold",
];

impl TableMasker {
    /// An empty table; every word uses the fallback pool.
    pub fn new() -> TableMasker {
        TableMasker::default()
    }

    /// A small default synonym table on top of the fallback pool.
    pub fn with_default_table() -> TableMasker {
        let entries: [(&str, &[&str]); 10] = [
            ("good", &["great", "fine", "nice", "decent", "solid"]),
            ("bad", &["poor", "awful", "terrible", "lousy", "rough"]),
            ("day", &["morning", "week", "evening", "month", "year"]),
            ("love", &["adore", "like", "enjoy", "cherish", "prefer"]),
            ("happy", &["glad", "cheerful", "pleased", "joyful", "content"]),
            ("sad", &["unhappy", "gloomy", "down", "blue", "upset"]),
            ("big", &["large", "huge", "giant", "massive", "grand"]),
            ("small", &["little", "tiny", "minor", "slight", "modest"]),
            ("work", &["job", "task", "labor", "duty", "effort"]),
            ("weather", &["climate", "forecast", "rain", "wind", "sky"]),
        ];
        let mut masker = TableMasker::default();
        for (word, candidates) in entries {
            masker.insert(word, candidates);
        }
        masker
    }

    pub fn insert(&mut self, word: &str, candidates: &[&str]) {
        self.table.insert(
            word.to_lowercase(),
            candidates.iter().map(|c| c.to_string()).collect(),
        );
    }
}

impl Masker for TableMasker {
    fn candidates(&self, tokens: &[&str], index: usize, k: usize) -> Vec<(String, f64)> {
        let original = tokens[index];
        let folded = original.to_lowercase();
        let mut out: Vec<(String, f64)> = Vec::with_capacity(k);
        if let Some(listed) = self.table.get(&folded) {
            for (rank, candidate) in listed.iter().take(k).enumerate() {
                out.push((candidate.clone(), 1.0 - rank as f64 / TOP_K as f64));
            }
        }
        if out.len() < k {
            let start = (fnv1a64(folded.as_bytes()) as usize) % FALLBACK_POOL.len();
            let mut offset = 0usize;
            while out.len() < k && offset < FALLBACK_POOL.len() {
                let word = FALLBACK_POOL[(start + offset) % FALLBACK_POOL.len()];
                offset += 1;
                if word != folded && !out.iter().any(|(c, _)| c == word) {
                    out.push((word.to_string(), 0.5 - offset as f64 / 100.0));
                }
            }
        }
        out
    }
}

/// Indices of tokens eligible for replacement: wholly alphabetic words.
/// URLs, mentions, numbers, and special tokens all contain non-alphabetic
/// characters and are skipped.
pub fn maskable_indices(tokens: &[&str]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_empty() && t.chars().all(char::is_alphabetic))
        .map(|(i, _)| i)
        .collect()
}

fn ceil_fraction(fraction: f64, count: usize) -> usize {
    let exact = fraction * count as f64;
    let mut n = exact as usize;
    if (n as f64) < exact {
        n += 1;
    }
    n.clamp(1, count)
}

/// Generates `variants_per_input` labeled variants of one instance. Returns
/// an empty list (with a warning) when the text has no maskable token.
pub fn augment_instance(
    instance: &TextInstance,
    config: &AugmentConfig,
    masker: &dyn Masker,
) -> Result<Vec<TextInstance>, AugmentError> {
    config.validate()?;
    let tokens: Vec<&str> = instance.text.split_whitespace().collect();
    let maskable = maskable_indices(&tokens);
    if maskable.is_empty() {
        log::warn!(
            "augment: instance {:?} has no maskable token, skipping",
            instance.id
        );
        return Ok(Vec::new());
    }
    let replace_count = ceil_fraction(config.replace_fraction, maskable.len());
    let parent_key = dedup_key(&instance.text);

    let mut variants = Vec::with_capacity(config.variants_per_input);
    let mut emitted_keys: BTreeSet<String> = BTreeSet::new();
    for variant_index in 0..config.variants_per_input {
        let tag = format!("{}#{variant_index}", instance.id);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, &tag));

        let mut text = String::new();
        let mut key = String::new();
        for attempt in 0..=MAX_REDRAWS {
            let chosen = sample(&mut rng, maskable.len(), replace_count);
            let mut out_tokens: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
            for pick in chosen.iter() {
                let index = maskable[pick];
                let original = tokens[index];
                let candidates: Vec<String> = masker
                    .candidates(&tokens, index, TOP_K)
                    .into_iter()
                    .map(|(c, _)| c)
                    .filter(|c| c.to_lowercase() != original.to_lowercase())
                    .take(TOP_K)
                    .collect();
                if candidates.is_empty() {
                    // Masker had nothing usable for this slot; leave the
                    // token in place and let the other slots differentiate.
                    continue;
                }
                out_tokens[index] = candidates[rng.gen_range(0..candidates.len())].clone();
            }
            text = out_tokens.join(" ");
            key = dedup_key(&text);
            if key != parent_key && !emitted_keys.contains(&key) {
                break;
            }
            if attempt == MAX_REDRAWS {
                log::warn!(
                    "augment: variant {variant_index} of {:?} still collides after {MAX_REDRAWS} redraws, keeping it",
                    instance.id
                );
            }
        }
        emitted_keys.insert(key);
        variants.push(TextInstance {
            id: format!("{}-aug{variant_index}", instance.id),
            text,
            sarcastic: instance.sarcastic,
            category_flags: instance.category_flags,
            rephrase: None,
            source: Source::Augmented,
        });
    }
    Ok(variants)
}

/// Augments every instance passing the label filter (all instances when the
/// filter is absent); the output contains only the synthetic instances.
pub fn augment_corpus(
    corpus: &Corpus,
    label_filter: Option<CategoryLabel>,
    config: &AugmentConfig,
    masker: &dyn Masker,
) -> Result<Corpus, AugmentError> {
    config.validate()?;
    let mut out = Corpus::new(format!("{}-augmented", corpus.name));
    for instance in corpus.iter() {
        if let Some(label) = label_filter {
            if !instance.category_flags.get(label) {
                continue;
            }
        }
        out.instances
            .extend(augment_instance(instance, config, masker)?);
    }
    Ok(out)
}

/// Boxed masker type handed out by the model registry.
pub type BoxedMasker = Box<dyn Masker + Send + Sync>;
