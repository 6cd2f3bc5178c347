//! The sequence labelers: a BiLSTM encoder with global attention feeding a
//! linear-chain CRF over {blame, not-blame} tags, optionally trained jointly
//! with a problem-class head (softmax over the attention summary h*).
//!
//! The combined loss for one record is `CRF NLL + λ · class cross-entropy`;
//! the shared encoder receives both branches' gradients, each head only its
//! own. Training is minibatch gradient descent with per-epoch reshuffling,
//! inverted dropout on the encoder states, and early stopping on validation
//! blame accuracy with best-epoch restore. Every random draw derives from
//! the config seed, so runs are reproducible bit-for-bit.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attention::{
    attend, attend_backward, emissions, emissions_backward, Attention, AttentionCache,
};
use crate::corpus::{Corpus, CrashRecord, Frame};
use crate::crf::{self, CrfParams, N_STATES, TAG_BF, TAG_NOT_BF};
use crate::error::{invalid, Error, Result};
use crate::featurize::{featurize_stack_sparse, fit_vocab, FeaturizerVocab, DEFAULT_TFIDF_DIM};
use crate::model::{derive_seed, wrong_kind, ModelKind};
use crate::nn::tensor::{SparseRows, Tensor};
use crate::nn::{
    bilstm_backward_sparse, bilstm_forward_sparse, dropout_mask, AdamConfig, AdamState, BiLstm,
    Dense, TrainConfig,
};

/// Fine-tuning steps with this fraction of the configured learning rate, so
/// a handful of target-app records nudges the global weights instead of
/// overwriting them.
pub const FINE_TUNE_LR_SCALE: f64 = 0.3;

/// Default weight of the problem-class loss in multi-task training.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// All parameters of one sequence labeler.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceParams {
    pub bilstm: BiLstm,
    pub attention: Attention,
    /// Maps `[h_t ; h*]` (4H) to the two per-frame tag scores.
    pub emission_head: Dense,
    pub crf: CrfParams,
    /// Problem-class softmax over h* (2H); present only for multi-task models.
    pub class_head: Option<Dense>,
}

impl SequenceParams {
    /// Fresh Glorot-initialized parameters. The class head is drawn after
    /// every shared tensor, so single- and multi-task models started from
    /// one seed share identical encoder initializations.
    pub fn new(
        input_dim: usize,
        hidden: usize,
        n_classes: Option<usize>,
        rng: &mut ChaCha8Rng,
    ) -> SequenceParams {
        let bilstm = BiLstm::new(input_dim, hidden, rng);
        let attention = Attention::new(2 * hidden, rng);
        let emission_head = Dense::new(4 * hidden, crf::N_TAGS, rng);
        let class_head = n_classes.map(|n| Dense::new(2 * hidden, n, rng));
        SequenceParams { bilstm, attention, emission_head, crf: CrfParams::new(), class_head }
    }

    /// Same shapes, all zeros — the gradient accumulator. (The CRF table is
    /// genuinely zero here, without the NEG_INF masking of live parameters:
    /// masked transitions never receive gradient.)
    pub fn zeros_like(&self) -> SequenceParams {
        SequenceParams {
            bilstm: self.bilstm.zeros_like(),
            attention: Attention::zeros(self.attention.state_dim()),
            emission_head: Dense::zeros(
                self.emission_head.input_dim(),
                self.emission_head.output_dim(),
            ),
            crf: CrfParams { trans: Tensor::zeros(&[N_STATES, N_STATES]) },
            class_head: self
                .class_head
                .as_ref()
                .map(|h| Dense::zeros(h.input_dim(), h.output_dim())),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.bilstm.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.bilstm.hidden_dim()
    }

    /// Every tensor in a fixed, documented order: BiLSTM (forward then
    /// backward direction), attention vector, emission head, CRF transitions,
    /// then the class head if present. Serialization and the optimizer both
    /// rely on this order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut t = self.bilstm.tensors();
        t.push(&self.attention.w);
        t.push(&self.emission_head.w);
        t.push(&self.emission_head.b);
        t.push(&self.crf.trans);
        if let Some(head) = &self.class_head {
            t.push(&head.w);
            t.push(&head.b);
        }
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut t = self.bilstm.tensors_mut();
        t.push(&mut self.attention.w);
        t.push(&mut self.emission_head.w);
        t.push(&mut self.emission_head.b);
        t.push(&mut self.crf.trans);
        if let Some(head) = &mut self.class_head {
            t.push(&mut head.w);
            t.push(&mut head.b);
        }
        t
    }

    fn zero_grads(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    /// Encoder states and attention for one featurized stack, without
    /// dropout — the inference path.
    fn encode(&self, x: &SparseRows) -> Result<(Tensor, AttentionCache)> {
        let (states, _) = bilstm_forward_sparse(&self.bilstm, x);
        let att = attend(&self.attention, &states)?;
        Ok((states, att))
    }

    /// Blame index and attention weights via the one-blame-frame constrained
    /// decode.
    pub fn decode(&self, x: &SparseRows) -> Result<(usize, Vec<f64>)> {
        let (states, att) = self.encode(x)?;
        let p = emissions(&self.emission_head, &states, &att.h_star)?;
        let (tags, _) = crf::constrained_decode(&p, &self.crf)?;
        let index = crf::blame_index(&tags)
            .expect("constrained decode always emits exactly one blame tag");
        Ok((index, att.alpha))
    }

    /// Class-head probabilities (stable softmax over the class list).
    pub fn class_probabilities(&self, x: &SparseRows) -> Result<Vec<f64>> {
        let head = self
            .class_head
            .as_ref()
            .ok_or_else(|| invalid("this model has no problem-class head"))?;
        let (_, att) = self.encode(x)?;
        Ok(softmax(&head.forward(&att.h_star)))
    }

    /// Forward + backward for one record under the combined loss. Gradients
    /// accumulate into `grads`; returns `(blame NLL, class cross-entropy)`.
    /// The class term is scaled by `lambda` in both the combined loss and the
    /// gradients, so λ=0 leaves the class head untouched.
    #[allow(clippy::too_many_arguments)]
    pub fn loss_and_grads(
        &self,
        x: &SparseRows,
        tags: &[usize],
        class_index: Option<usize>,
        lambda: f64,
        dropout_rate: f64,
        dropout_seed: u64,
        grads: &mut SequenceParams,
    ) -> Result<(f64, f64)> {
        let (raw_states, bilstm_cache) = bilstm_forward_sparse(&self.bilstm, x);

        // Inverted dropout on the encoder states (identity when rate is 0).
        let mask = dropout_mask(raw_states.len(), dropout_rate, dropout_seed);
        let mut states = raw_states;
        for (v, m) in states.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }

        let att = attend(&self.attention, &states)?;
        let p = emissions(&self.emission_head, &states, &att.h_star)?;
        let (blame_loss, d_p, d_trans) = crf::nll(&p, &self.crf, tags)?;
        grads.crf.trans.add_scaled(&d_trans, 1.0);

        let mut d_states = states.zeros_like();
        let mut d_h_star = vec![0.0; att.h_star.len()];
        emissions_backward(
            &self.emission_head,
            &states,
            &att.h_star,
            &d_p,
            &mut grads.emission_head,
            &mut d_states,
            &mut d_h_star,
        );

        let mut class_loss = 0.0;
        if let (Some(head), Some(target)) = (&self.class_head, class_index) {
            let logits = head.forward(&att.h_star);
            let probs = softmax(&logits);
            class_loss = -probs[target].max(1e-300).ln();
            // d loss / d logit = probs - onehot, scaled by λ.
            let mut d_logits = probs;
            d_logits[target] -= 1.0;
            for d in &mut d_logits {
                *d *= lambda;
            }
            let grad_head = grads.class_head.as_mut().expect("grads mirror the param shapes");
            head.backward(&att.h_star, &d_logits, grad_head, Some(&mut d_h_star));
        }

        attend_backward(&self.attention, &states, &att, &d_h_star, &mut grads.attention.w, &mut d_states);

        // Back through dropout, then the encoder. The input gradient is not
        // needed: feature vectors are leaves.
        for (v, m) in d_states.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        bilstm_backward_sparse(&self.bilstm, x, &bilstm_cache, &d_states, &mut grads.bilstm);

        if !blame_loss.is_finite() || !class_loss.is_finite() {
            return Err(Error::NonFinite {
                context: "sequence-model loss".to_string(),
                detail: format!("blame {blame_loss}, class {class_loss}"),
            });
        }
        Ok((blame_loss, class_loss))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Gold tags for a blame index: BF at the blamed frame, !BF elsewhere.
pub fn tags_for_blame(depth: usize, blame: usize) -> Vec<usize> {
    (0..depth).map(|t| if t == blame { TAG_BF } else { TAG_NOT_BF }).collect()
}

/// A trained sequence labeler: parameters plus everything needed to featurize
/// and to interpret the class head.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModel {
    pub kind: ModelKind,
    pub vocab: FeaturizerVocab,
    pub params: SequenceParams,
    pub config: TrainConfig,
    /// Class-loss weight the model was trained with (0 for single-task).
    pub lambda: f64,
    /// Problem classes the class head indexes into, sorted; empty for
    /// single-task models.
    pub classes: Vec<String>,
}

impl SequenceModel {
    /// Blamed frame index and per-frame attention weights.
    pub fn predict_blame(&self, stack: &[Frame], app: &str) -> Result<(usize, Vec<f64>)> {
        let x = featurize_stack_sparse(stack, app, &self.vocab)?;
        self.params.decode(&x)
    }

    pub fn predict_record(&self, record: &CrashRecord) -> Result<(usize, Vec<f64>)> {
        self.predict_blame(&record.stack, &record.app)
    }

    /// Most probable problem class and the full distribution over
    /// `self.classes`. Errors for single-task models.
    pub fn predict_problem_class(&self, stack: &[Frame], app: &str) -> Result<(String, Vec<f64>)> {
        if self.params.class_head.is_none() {
            return Err(wrong_kind("deepanalyze", self.kind));
        }
        let x = featurize_stack_sparse(stack, app, &self.vocab)?;
        let probs = self.params.class_probabilities(&x)?;
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok((self.classes[best].clone(), probs))
    }

    /// Continues training from these weights on `target_train`, evaluating
    /// early stopping on `target_valid`, at [`FINE_TUNE_LR_SCALE`] times the
    /// configured learning rate. The featurizer vocabulary and class list
    /// stay frozen. An empty target set returns the model unchanged (pure
    /// domain transfer).
    pub fn fine_tune(
        &self,
        target_train: &Corpus,
        target_valid: &Corpus,
        config: &TrainConfig,
    ) -> Result<(SequenceModel, TrainingTrace)> {
        if target_train.is_empty() {
            return Ok((self.clone(), TrainingTrace::default()));
        }
        config.validate()?;
        if self.vocab.feature_dim() != self.params.input_dim() {
            return Err(invalid(format!(
                "bundle vocabulary ({} features) does not match encoder input ({})",
                self.vocab.feature_dim(),
                self.params.input_dim()
            )));
        }
        let lr = config.learning_rate * FINE_TUNE_LR_SCALE;
        train_loop(
            self.kind,
            self.vocab.clone(),
            self.params.clone(),
            self.classes.clone(),
            target_train,
            target_valid,
            config,
            self.lambda,
            lr,
        )
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// Mean CRF NLL over training records.
    pub blame_loss: f64,
    /// Mean class cross-entropy (0 for single-task models).
    pub class_loss: f64,
    /// Exact-match blame accuracy on the validation split.
    pub valid_accuracy: f64,
}

/// What happened during a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochStats>,
    /// Index into `epochs` of the restored (best-validation) parameters.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// One featurized, tagged training record.
struct PreparedRecord {
    x: SparseRows,
    tags: Vec<usize>,
    blame: usize,
    class_index: Option<usize>,
}

fn prepare(
    corpus: &Corpus,
    vocab: &FeaturizerVocab,
    class_lookup: Option<&HashMap<String, usize>>,
    role: &str,
) -> Result<Vec<PreparedRecord>> {
    let mut prepared = Vec::with_capacity(corpus.len());
    for record in &corpus.records {
        let blame = record.blame_index.ok_or_else(|| {
            invalid(format!("every {role} record needs a blame label"))
        })?;
        let class_index = match class_lookup {
            Some(lookup) => Some(*lookup.get(&record.problem_class).ok_or_else(|| {
                invalid(format!(
                    "problem class {:?} is not in the model's class list",
                    record.problem_class
                ))
            })?),
            None => None,
        };
        prepared.push(PreparedRecord {
            x: featurize_stack_sparse(&record.stack, &record.app, vocab)?,
            tags: tags_for_blame(record.depth(), blame),
            blame,
            class_index,
        });
    }
    Ok(prepared)
}

/// Trains a sequence labeler from scratch. `bilstm_crf_attn` ignores
/// `lambda` and has no class head; `deepanalyze` adds the problem-class
/// branch weighted by `lambda`. Returns the best-validation model and the
/// per-epoch trace.
pub fn train_sequence_model(
    kind: ModelKind,
    train: &Corpus,
    valid: &Corpus,
    config: &TrainConfig,
    lambda: f64,
) -> Result<(SequenceModel, TrainingTrace)> {
    if !kind.is_sequence() {
        return Err(wrong_kind("bilstm_crf_attn or deepanalyze", kind));
    }
    config.validate()?;
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let vocab = fit_vocab(train, DEFAULT_TFIDF_DIM)?;

    let multi_task = kind == ModelKind::DeepAnalyze;
    let classes = if multi_task { train.problem_classes() } else { Vec::new() };
    let lambda = if multi_task { lambda } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = SequenceParams::new(
        vocab.feature_dim(),
        config.hidden,
        multi_task.then_some(classes.len()),
        &mut rng,
    );
    train_loop(kind, vocab, params, classes, train, valid, config, lambda, config.learning_rate)
}

/// The shared optimization loop behind scratch training and fine-tuning.
#[allow(clippy::too_many_arguments)]
fn train_loop(
    kind: ModelKind,
    vocab: FeaturizerVocab,
    mut params: SequenceParams,
    classes: Vec<String>,
    train: &Corpus,
    valid: &Corpus,
    config: &TrainConfig,
    lambda: f64,
    learning_rate: f64,
) -> Result<(SequenceModel, TrainingTrace)> {
    if train.is_empty() || valid.is_empty() {
        return Err(invalid("training needs non-empty train and validation corpora"));
    }
    let class_lookup: Option<HashMap<String, usize>> = params.class_head.as_ref().map(|_| {
        classes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect()
    });
    let train_records = prepare(train, &vocab, class_lookup.as_ref(), "training")?;
    let valid_records = prepare(valid, &vocab, None, "validation")?;

    let mut adam = AdamState::new(AdamConfig::default(), &params.tensors());
    let mut grads = params.zeros_like();
    let mut order: Vec<u32> = (0..train_records.len() as u32).collect();

    let mut trace = TrainingTrace::default();
    let mut best_params = params.clone();
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut epochs_since_best = 0usize;

    for epoch in 0..config.max_epochs {
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, 1, epoch as u64]));
        order.shuffle(&mut shuffle_rng);

        let (mut blame_sum, mut class_sum) = (0.0, 0.0);
        for batch in order.chunks(config.batch_size) {
            grads.zero_grads();
            for &idx in batch {
                let r = &train_records[idx as usize];
                let dropout_seed = derive_seed(&[config.seed, 2, epoch as u64, idx as u64]);
                let (blame_loss, class_loss) = params.loss_and_grads(
                    &r.x,
                    &r.tags,
                    r.class_index,
                    lambda,
                    config.dropout,
                    dropout_seed,
                    &mut grads,
                )?;
                blame_sum += blame_loss;
                class_sum += class_loss;
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grads.tensors_mut() {
                g.scale(scale);
            }
            let grad_refs = grads.tensors();
            let mut param_refs = params.tensors_mut();
            adam.step(&mut param_refs, &grad_refs, learning_rate)?;
        }

        let mut correct = 0usize;
        for r in &valid_records {
            let (predicted, _) = params.decode(&r.x)?;
            if predicted == r.blame {
                correct += 1;
            }
        }
        let valid_accuracy = correct as f64 / valid_records.len() as f64;
        trace.epochs.push(EpochStats {
            blame_loss: blame_sum / train_records.len() as f64,
            class_loss: class_sum / train_records.len() as f64,
            valid_accuracy,
        });

        if valid_accuracy > best_accuracy {
            best_accuracy = valid_accuracy;
            best_params = params.clone();
            trace.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= config.patience {
                trace.stopped_early = true;
                break;
            }
        }
    }

    Ok((
        SequenceModel { kind, vocab, params: best_params, config: config.clone(), lambda, classes },
        trace,
    ))
}
