//! Position heuristics and the historical blame-frequency baseline.
//!
//! These are the floors every learned model must clear: blaming the top
//! frame already matches the ground truth for roughly two thirds of crashes,
//! so a learned localizer earns its keep only above that line.

use std::collections::BTreeMap;

use crate::corpus::{Corpus, Frame};

/// Blames the top of the stack.
pub fn predict_top(_stack: &[Frame]) -> usize {
    0
}

/// Blames the second frame, or the top on depth-1 stacks.
pub fn predict_second(stack: &[Frame]) -> usize {
    1usize.min(stack.len().saturating_sub(1))
}

/// How often each method key was the blamed frame in historical data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlameFrequencyTable {
    /// Method key (`binary!namespace::method`) → times blamed. Only blamed
    /// keys are stored, so every count is ≥ 1.
    pub counts: BTreeMap<String, u64>,
}

impl BlameFrequencyTable {
    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Counts blamed method keys over the labeled records of `train`.
pub fn fit_blame_table(train: &Corpus) -> BlameFrequencyTable {
    let mut counts = BTreeMap::new();
    for record in &train.records {
        if let Some(blame) = record.blame_index {
            *counts.entry(record.stack[blame].method_key()).or_insert(0) += 1;
        }
    }
    BlameFrequencyTable { counts }
}

/// Blames the frame whose method key was most frequently blamed. Ties go to
/// the frame highest in the stack; when no frame has history the heuristic
/// degrades to the top frame.
pub fn predict_most_freq(table: &BlameFrequencyTable, stack: &[Frame]) -> usize {
    let mut best = 0usize;
    let mut best_count = 0u64;
    for (i, frame) in stack.iter().enumerate() {
        let count = table.count(&frame.method_key());
        if count > best_count {
            best = i;
            best_count = count;
        }
    }
    best
}
