//! Per-frame logistic regression: every frame is an independent binary
//! example (blamed or not), and a stack's prediction is its highest-scoring
//! frame. Deliberately context-free — each frame sees only its own feature
//! vector — which is exactly what the sequence models improve on.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Frame};
use crate::error::{invalid, Result};
use crate::featurize::{
    featurize_record_sparse, featurize_stack_sparse, FeaturizerVocab, DEFAULT_TFIDF_DIM,
};
use crate::model::derive_seed;
use crate::nn::tensor::{SparseRows, Tensor};
use crate::nn::{AdamConfig, AdamState, TrainConfig};

/// A fitted per-frame classifier plus the vocabulary it was fit with.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub vocab: FeaturizerVocab,
    /// One weight per feature dimension.
    pub w: Tensor,
    pub bias: f64,
    pub config: TrainConfig,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn sparse_score(w: &Tensor, bias: f64, row: &[(u32, f64)]) -> f64 {
    bias + row.iter().map(|&(j, v)| w.data()[j as usize] * v).sum::<f64>()
}

impl LogRegModel {
    /// Raw logit per frame; the sigmoid is monotone, so these rank frames
    /// identically to probabilities.
    pub fn frame_scores(&self, stack: &[Frame], app: &str) -> Result<Vec<f64>> {
        let rows = featurize_stack_sparse(stack, app, &self.vocab)?;
        Ok((0..rows.len()).map(|t| sparse_score(&self.w, self.bias, rows.row(t))).collect())
    }
}

/// Fits the classifier by minibatch gradient descent on weighted binary
/// log-loss. Blamed frames are rare (one per stack), so the positive class
/// is reweighted by the negative/positive count ratio.
pub fn train_logreg(train: &Corpus, config: &TrainConfig) -> Result<LogRegModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(invalid("cannot train on an empty corpus"));
    }
    let vocab = fit_vocab_for_training(train)?;
    let dim = vocab.feature_dim();

    let mut features: Vec<SparseRows> = Vec::with_capacity(train.len());
    let mut examples: Vec<(u32, u16, bool)> = Vec::new();
    let (mut pos, mut neg) = (0u64, 0u64);
    for (r, record) in train.records.iter().enumerate() {
        let blame = record
            .blame_index
            .ok_or_else(|| invalid("every training record needs a blame label"))?;
        let rows = featurize_record_sparse(record, &vocab)?;
        for t in 0..rows.len() {
            let y = t == blame;
            if y {
                pos += 1;
            } else {
                neg += 1;
            }
            examples.push((r as u32, t as u16, y));
        }
        features.push(rows);
    }
    if pos == 0 || neg == 0 {
        return Err(invalid("training frames are single-class; nothing to separate"));
    }
    let pos_weight = neg as f64 / pos as f64;

    let mut w = Tensor::zeros(&[dim]);
    let mut b = Tensor::zeros(&[1]);
    let mut adam = AdamState::new(AdamConfig::default(), &[&w, &b]);
    let mut order: Vec<u32> = (0..examples.len() as u32).collect();
    let mut grad_w = Tensor::zeros(&[dim]);
    let mut grad_b = Tensor::zeros(&[1]);

    for epoch in 0..config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, 1, epoch as u64]));
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad_w.fill(0.0);
            grad_b.fill(0.0);
            for &e in batch {
                let (r, t, y) = examples[e as usize];
                let row = features[r as usize].row(t as usize);
                let p = sigmoid(sparse_score(&w, b.data()[0], row));
                // d log-loss / d logit, with the positive class reweighted.
                let d = if y { pos_weight * (p - 1.0) } else { p };
                for &(j, v) in row {
                    grad_w.data_mut()[j as usize] += d * v;
                }
                grad_b.data_mut()[0] += d;
            }
            let scale = 1.0 / batch.len() as f64;
            grad_w.scale(scale);
            grad_b.scale(scale);
            adam.step(&mut [&mut w, &mut b], &[&grad_w, &grad_b], config.learning_rate)?;
        }
    }
    Ok(LogRegModel { vocab, w, bias: b.data()[0], config: config.clone() })
}

pub(crate) fn fit_vocab_for_training(train: &Corpus) -> Result<FeaturizerVocab> {
    crate::featurize::fit_vocab(train, DEFAULT_TFIDF_DIM)
}

/// The stack's highest-scoring frame; ties go to the frame nearest the top.
pub fn predict_logreg(model: &LogRegModel, stack: &[Frame], app: &str) -> Result<usize> {
    let scores = model.frame_scores(stack, app)?;
    let mut best = 0usize;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}
