//! Stable 64-bit FNV-1a hashing.
//!
//! Used wherever a run seed has to be mixed with a string so that results do
//! not depend on processing order: per-stratum shuffling, per-instance
//! augmentation generators, and the word-hash tokenizer. The function is part
//! of the reproducibility contract, so it must never change.

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a sub-seed from a base seed and a string tag.
pub fn mix_seed(seed: u64, tag: &str) -> u64 {
    let mut h = fnv1a64(&seed.to_le_bytes());
    for &b in tag.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
