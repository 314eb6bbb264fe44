//! Label-combination statistics.
//!
//! Keys are canonicalized in the fixed flag order (sarcasm, irony, satire,
//! understatement, overstatement, rhetorical_question) so a given corpus
//! always produces string-identical keys: `"non-sarcastic"`, `"unlabeled"`,
//! `"only-<label>"` for a single flag, flags joined with `+` otherwise, and
//! `"sarcastic-uncategorized"` for a sarcastic instance with no flags (binary
//! auxiliary sources produce those).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CategoryFlags, Corpus};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl LabelStats {
    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }
}

/// Canonical combination key for one instance's labels.
pub fn combination_key(sarcastic: Option<bool>, flags: &CategoryFlags) -> String {
    match sarcastic {
        None => "unlabeled".to_string(),
        Some(false) => "non-sarcastic".to_string(),
        Some(true) => {
            let set = flags.set_labels();
            match set.len() {
                0 => "sarcastic-uncategorized".to_string(),
                1 => alloc::format!("only-{}", set[0].name()),
                _ => {
                    let names: Vec<&str> = set.iter().map(|l| l.name()).collect();
                    names.join("+")
                }
            }
        }
    }
}

pub fn label_stats(corpus: &Corpus) -> LabelStats {
    let mut stats = LabelStats::default();
    for instance in corpus.iter() {
        let key = combination_key(instance.sarcastic, &instance.category_flags);
        *stats.counts.entry(key).or_insert(0) += 1;
        stats.total += 1;
    }
    stats
}
