//! Crash-stack blame localization.
//!
//! This crate labels the *blamed frame* of a symbolized crash stack — the
//! frame containing (or closest to) the true crash location. It ships:
//!
//! - a crash-corpus toolkit: parsing, dedup, temporal splits, and a seeded
//!   synthetic generator with planted ground truth ([`corpus`]),
//! - corpus statistics such as depth and blame-location distributions
//!   ([`stats`]),
//! - a per-frame featurizer (tf-idf blocks plus engineered flags)
//!   ([`featurize`]),
//! - a small dense numeric core with hand-derived gradients ([`nn`]),
//! - frame-level attention ([`attention`]) and a linear-chain CRF ([`crf`]),
//! - the model zoo: heuristics, logistic regression, a BiLSTM-CRF-Attn
//!   sequence labeler and its multi-task variant, plus fine-tuning
//!   ([`model`]),
//! - accuracy reporting, feature importances, and transfer-learning curves
//!   ([`eval`]).
//!
//! The `stackblame` binary exposes the pipeline as subcommands; the
//! `examples/` directory shows one runnable program per capability.

pub mod attention;
pub mod cli;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod featurize;
pub mod model;
pub mod nn;
pub mod stats;

pub use error::{Error, Result};
