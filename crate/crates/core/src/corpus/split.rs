//! Deterministic stratified train/validation/test splitting.
//!
//! Each stratum is shuffled with a generator seeded from the run seed mixed
//! with the stratum key, then apportioned to the three splits by largest
//! remainder, so every split size stays within one instance of its exact
//! quota per stratum and the result does not depend on how other strata are
//! processed.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CategoryLabel, Corpus, CorpusError, TextInstance};
use crate::hash::mix_seed;

/// What to stratify on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratifyKey {
    /// The binary sarcasm label.
    Sarcastic,
    /// One of the six category flags.
    Flag(CategoryLabel),
}

impl StratifyKey {
    pub fn parse(s: &str) -> Option<StratifyKey> {
        if s.trim().eq_ignore_ascii_case("sarcastic") {
            Some(StratifyKey::Sarcastic)
        } else {
            CategoryLabel::parse(s).map(StratifyKey::Flag)
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StratifyKey::Sarcastic => "sarcastic",
            StratifyKey::Flag(label) => label.name(),
        }
    }

    fn stratum_of(&self, instance: &TextInstance) -> String {
        match self {
            StratifyKey::Sarcastic => match instance.sarcastic {
                Some(true) => "sarcastic".to_string(),
                Some(false) => "non-sarcastic".to_string(),
                None => "unlabeled".to_string(),
            },
            StratifyKey::Flag(label) => {
                if instance.category_flags.get(*label) {
                    "positive".to_string()
                } else {
                    "negative".to_string()
                }
            }
        }
    }
}

impl Serialize for StratifyKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for StratifyKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        StratifyKey::parse(&raw).ok_or_else(|| {
            serde::de::Error::custom(alloc::format!(
                "unknown stratification key {raw:?}; expected \"sarcastic\" or a category name"
            ))
        })
    }
}

/// Split specification: train/validation/test ratios, the seed, and the
/// stratification key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    pub seed: u64,
    pub stratify_on: StratifyKey,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec {
            ratios: [0.7, 0.2, 0.1],
            seed: 17,
            stratify_on: StratifyKey::Sarcastic,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let sum: f64 = self.ratios.iter().sum();
        let in_range = self.ratios.iter().all(|r| (0.0..=1.0).contains(r));
        if !in_range || (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidSplitSpec { ratios: self.ratios });
        }
        Ok(())
    }
}

/// Integer apportionment of `n` seats to the three ratios by largest
/// remainder; ties go to the lower split index. Every count is the floor or
/// ceiling of its exact quota.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    let mut remainders = [0f64; 3];
    let mut assigned = 0usize;
    for i in 0..3 {
        let quota = ratios[i] * n as f64;
        counts[i] = quota as usize; // floor for non-negative quotas
        remainders[i] = quota - counts[i] as f64;
        assigned += counts[i];
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        remainders[b]
            .partial_cmp(&remainders[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut leftover = n - assigned;
    for &i in &order {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Splits a corpus into disjoint train/validation/test corpora covering the
/// input, stratum by stratum. Deterministic for a fixed spec.
pub fn stratified_split(
    corpus: &Corpus,
    spec: &SplitSpec,
) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }

    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (index, instance) in corpus.iter().enumerate() {
        strata
            .entry(spec.stratify_on.stratum_of(instance))
            .or_default()
            .push(index);
    }

    let mut split_indices: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (key, mut indices) in strata {
        if indices.len() < 3 {
            log::warn!(
                "stratum {key:?} has {} instance(s), fewer than the three splits; assigning greedily",
                indices.len()
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, &key));
        indices.shuffle(&mut rng);
        let counts = apportion(indices.len(), &spec.ratios);
        let mut cursor = 0usize;
        for (split, &count) in split_indices.iter_mut().zip(&counts) {
            split.extend_from_slice(&indices[cursor..cursor + count]);
            cursor += count;
        }
    }

    let mut parts = split_indices.iter_mut();
    let mut build = |suffix: &str| {
        let indices = parts.next().expect("three splits");
        indices.sort_unstable();
        Corpus {
            name: alloc::format!("{}-{suffix}", corpus.name),
            instances: indices.iter().map(|&i| corpus.instances[i].clone()).collect(),
        }
    };
    let train = build("train");
    let val = build("val");
    let test = build("test");
    Ok((train, val, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use alloc::format;

    fn corpus(total: usize, positives: usize) -> Corpus {
        let instances = (0..total)
            .map(|i| {
                TextInstance::binary(
                    format!("i{i}"),
                    format!("text number {i}"),
                    i < positives,
                    Source::Isarcasm,
                )
            })
            .collect();
        Corpus::validated("c", instances).unwrap()
    }

    #[test]
    fn apportion_is_within_one_of_quota() {
        for n in [1usize, 2, 3, 7, 10, 999] {
            let counts = apportion(n, &[0.7, 0.2, 0.1]);
            assert_eq!(counts.iter().sum::<usize>(), n);
            for (count, ratio) in counts.iter().zip([0.7, 0.2, 0.1]) {
                assert!((*count as f64 - ratio * n as f64).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn split_1000_with_200_positives() {
        // 0.7/0.2/0.1 of both strata are exact integers, so the split counts
        // are forced: 700/200/100 overall and 140/40/20 positives.
        let (train, val, test) = stratified_split(&corpus(1000, 200), &SplitSpec::default())
            .unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (700, 200, 100));
        let positives =
            |c: &Corpus| c.iter().filter(|i| i.sarcastic == Some(true)).count();
        assert_eq!(positives(&train), 140);
        assert_eq!(positives(&val), 40);
        assert_eq!(positives(&test), 20);
    }

    #[test]
    fn split_partitions_the_corpus() {
        let input = corpus(103, 31);
        let (train, val, test) = stratified_split(&input, &SplitSpec::default()).unwrap();
        let mut ids: Vec<&str> = train
            .iter()
            .chain(val.iter())
            .chain(test.iter())
            .map(|i| i.id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), input.len());
    }

    #[test]
    fn split_is_deterministic() {
        let input = corpus(250, 80);
        let spec = SplitSpec::default();
        let a = stratified_split(&input, &spec).unwrap();
        let b = stratified_split(&input, &spec).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
    }

    #[test]
    fn invalid_ratios_rejected() {
        let spec = SplitSpec {
            ratios: [0.5, 0.5, 0.1],
            ..SplitSpec::default()
        };
        assert!(matches!(
            stratified_split(&corpus(10, 5), &spec),
            Err(CorpusError::InvalidSplitSpec { .. })
        ));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            stratified_split(&Corpus::new("e"), &SplitSpec::default()),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn tiny_stratum_assigned_greedily() {
        // One positive instance: the largest-ratio split gets it.
        let (train, val, test) = stratified_split(&corpus(11, 1), &SplitSpec::default()).unwrap();
        let positives: usize = [&train, &val, &test]
            .iter()
            .map(|c| c.iter().filter(|i| i.sarcastic == Some(true)).count())
            .sum();
        assert_eq!(positives, 1);
        assert!(train.iter().any(|i| i.sarcastic == Some(true)));
    }

    #[test]
    fn stratify_key_parses() {
        assert_eq!(StratifyKey::parse("sarcastic"), Some(StratifyKey::Sarcastic));
        assert_eq!(
            StratifyKey::parse("irony"),
            Some(StratifyKey::Flag(CategoryLabel::Irony))
        );
        assert_eq!(StratifyKey::parse("bogus"), None);
    }

    #[test]
    fn split_spec_serde_round_trip() {
        let spec = SplitSpec {
            ratios: [0.8, 0.1, 0.1],
            seed: 99,
            stratify_on: StratifyKey::Flag(CategoryLabel::Satire),
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: SplitSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(json.contains("\"satire\""));
    }
}
