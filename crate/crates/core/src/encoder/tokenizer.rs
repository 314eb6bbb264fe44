//! Word-hash tokenizer for the bundled encoder families.
//!
//! Whitespace tokens are mapped into a fixed-size id space by FNV-1a; the
//! encoder learns embeddings per hash bucket rather than per word. Every
//! sequence is wrapped in the family's start/end tokens and truncated to the
//! requested maximum length.

use alloc::string::String;
use alloc::vec::Vec;

use crate::hash::fnv1a64;

pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
/// First id available for word buckets.
pub const FIRST_WORD_ID: usize = 3;

#[derive(Debug, Clone)]
pub struct HashTokenizer {
    vocab: usize,
    bos_token: String,
    eos_token: String,
}

impl HashTokenizer {
    pub fn new(vocab: usize, bos_token: &str, eos_token: &str) -> HashTokenizer {
        assert!(vocab > FIRST_WORD_ID, "vocabulary too small for special ids");
        HashTokenizer {
            vocab,
            bos_token: bos_token.into(),
            eos_token: eos_token.into(),
        }
    }

    pub fn bos_token(&self) -> &str {
        &self.bos_token
    }

    pub fn eos_token(&self) -> &str {
        &self.eos_token
    }

    pub fn word_id(&self, token: &str) -> usize {
        FIRST_WORD_ID + (fnv1a64(token.as_bytes()) as usize) % (self.vocab - FIRST_WORD_ID)
    }

    /// `[BOS, words..., EOS]`, truncated to `max_len` ids (words are cut,
    /// the start/end tokens are always present).
    pub fn encode(&self, text: &str, max_len: usize) -> Vec<usize> {
        debug_assert!(max_len >= 2);
        let budget = max_len.saturating_sub(2);
        let mut ids = Vec::with_capacity(max_len.min(budget + 2));
        ids.push(BOS_ID);
        for token in text.split_whitespace().take(budget) {
            ids.push(self.word_id(token));
        }
        ids.push(EOS_ID);
        ids
    }
}
