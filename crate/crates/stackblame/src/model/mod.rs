//! The model zoo: position heuristics, a blame-frequency table, per-frame
//! logistic regression, and the sequence labelers (BiLSTM-attention-CRF,
//! single- or multi-task), plus fine-tuning and the saved-bundle format.

mod bundle;
mod heuristic;
mod logreg;
mod sequence;

pub use bundle::{corpus_digest, load_model, save_model, ModelBundle, Payload};
pub use heuristic::{fit_blame_table, predict_most_freq, predict_second, predict_top, BlameFrequencyTable};
pub use logreg::{predict_logreg, train_logreg, LogRegModel};
pub use sequence::{
    tags_for_blame, train_sequence_model, EpochStats, SequenceModel, SequenceParams,
    TrainingTrace, DEFAULT_LAMBDA, FINE_TUNE_LR_SCALE,
};

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Every trainable or rule-based localizer the toolkit ships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Always blames the top of the stack.
    TopFrame,
    /// Always blames the second frame (the top on depth-1 stacks).
    SecondFrame,
    /// Blames the frame most frequently blamed historically.
    MostFreqTopFrame,
    /// Per-frame logistic regression; the stack's argmax frame wins.
    LogReg,
    /// BiLSTM + attention + CRF sequence labeler, blame task only.
    BiLstmCrfAttn,
    /// The same encoder trained jointly on blame and problem class.
    DeepAnalyze,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::TopFrame,
        ModelKind::SecondFrame,
        ModelKind::MostFreqTopFrame,
        ModelKind::LogReg,
        ModelKind::BiLstmCrfAttn,
        ModelKind::DeepAnalyze,
    ];

    /// Stable textual tag, used on the CLI and inside model files.
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::TopFrame => "top",
            ModelKind::SecondFrame => "second",
            ModelKind::MostFreqTopFrame => "most_freq",
            ModelKind::LogReg => "logreg",
            ModelKind::BiLstmCrfAttn => "bilstm_crf_attn",
            ModelKind::DeepAnalyze => "deepanalyze",
        }
    }

    pub fn parse(text: &str) -> Result<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.tag() == text)
            .ok_or_else(|| {
                let known: Vec<&str> = ModelKind::ALL.iter().map(|k| k.tag()).collect();
                invalid(format!("unknown model kind {text:?}; expected one of {known:?}"))
            })
    }

    /// True for the two trained sequence labelers.
    pub fn is_sequence(&self) -> bool {
        matches!(self, ModelKind::BiLstmCrfAttn | ModelKind::DeepAnalyze)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

pub(crate) fn wrong_kind(expected: &str, got: ModelKind) -> Error {
    Error::WrongModelKind { expected: expected.to_string(), got: got.tag().to_string() }
}

/// Derives an independent RNG stream from a master seed and a few context
/// values (epoch, record index, …), so every random draw in training is a
/// pure function of the master seed.
pub(crate) fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = crate::corpus::Fnv1a::new();
    for p in parts {
        h.update_u64(*p);
    }
    h.finish()
}
