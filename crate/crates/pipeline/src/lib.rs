//! IO, configuration, checkpointing, and the CLI for the sarcasm-detection
//! experiment pipeline. The algorithms live in `sarc-core`; this crate maps
//! them onto files and subcommands.

pub mod checkpoint_io;
pub mod cli;
pub mod config;
pub mod io;
pub mod runner;
pub mod stats;
