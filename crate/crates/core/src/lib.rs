//! Core algorithms for an intended-sarcasm detection experiment pipeline:
//! corpus assembly with exact-duplicate elimination, rule-based tweet
//! normalization, contextual word-replacement augmentation, a small offline
//! text encoder with a binary classification head, orchestration for the
//! three task formulations, and the evaluation metrics they are scored on.
//!
//! The crate is `no_std` + `alloc`: everything here operates on in-memory
//! data and is deterministic under a fixed seed. File formats, checkpoint
//! directories, and the command-line interface live in the companion
//! `sarc-pipeline` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augment;
pub mod corpus;
pub mod encoder;
pub mod hash;
pub mod metrics;
pub mod preprocess;
pub mod tasks;
