//! The saved-model container: one type that wraps every model kind behind a
//! uniform predict interface, plus a versioned little-endian binary format.
//!
//! File layout:
//!
//! ```text
//! magic "SBLB" | version u32 | kind u8 | training-corpus digest u64
//! | kind-specific payload | FNV-1a checksum u64 over everything before it
//! ```
//!
//! Strings are length-prefixed UTF-8; tensors are rank + dims + f64 data;
//! sequence parameters are written in the fixed [`SequenceParams::tensors`]
//! order. Loading a bundle reproduces bit-identical predictions.

use std::path::Path;

use crate::corpus::{fnv1a, write_atomic, Corpus, CrashRecord, Frame};
use crate::crf::CrfParams;
use crate::error::{invalid, Error, Result};
use crate::featurize::{FeaturizerVocab, TfIdfVocab};
use crate::model::heuristic::{
    fit_blame_table, predict_most_freq, predict_second, predict_top, BlameFrequencyTable,
};
use crate::model::logreg::{predict_logreg, train_logreg, LogRegModel};
use crate::model::sequence::{train_sequence_model, SequenceModel, SequenceParams, TrainingTrace};
use crate::model::{wrong_kind, ModelKind};
use crate::nn::lstm::{BiLstm, LstmParams};
use crate::nn::{Dense, TrainConfig, Tensor};
use crate::attention::Attention;

const MAGIC: &[u8; 4] = b"SBLB";
const FORMAT_VERSION: u32 = 1;
/// Upper bound on elements in one stored tensor; rejects nonsense sizes
/// before allocation.
const MAX_TENSOR_ELEMENTS: u64 = 100_000_000;

/// A trained (or rule-based) model, its provenance digest, and everything
/// needed to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    /// FNV-1a digest of the training corpus (dedup hashes in order); 0 for
    /// models built without data.
    pub train_digest: u64,
    pub payload: Payload,
}

/// Kind-specific model contents.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    TopFrame,
    SecondFrame,
    MostFreq(BlameFrequencyTable),
    LogReg(LogRegModel),
    Sequence(SequenceModel),
}

/// Order-sensitive digest of a corpus, for tying bundles and reports to the
/// data that produced them.
pub fn corpus_digest(corpus: &Corpus) -> u64 {
    let mut h = crate::corpus::Fnv1a::new();
    for record in &corpus.records {
        h.update_u64(record.dedup_hash);
    }
    h.finish()
}

impl ModelBundle {
    /// Fits `kind` on `corpus`. Sequence kinds hold out the temporally last
    /// `validation_fraction` of the corpus for early stopping and return a
    /// training trace; `lambda` weighs the class loss for `deepanalyze`.
    pub fn train(
        kind: ModelKind,
        corpus: &Corpus,
        config: &TrainConfig,
        lambda: f64,
    ) -> Result<(ModelBundle, Option<TrainingTrace>)> {
        if corpus.is_empty() {
            return Err(invalid("cannot train on an empty corpus"));
        }
        let train_digest = corpus_digest(corpus);
        let payload = match kind {
            ModelKind::TopFrame => Payload::TopFrame,
            ModelKind::SecondFrame => Payload::SecondFrame,
            ModelKind::MostFreqTopFrame => Payload::MostFreq(fit_blame_table(corpus)),
            ModelKind::LogReg => Payload::LogReg(train_logreg(corpus, config)?),
            ModelKind::BiLstmCrfAttn | ModelKind::DeepAnalyze => {
                let (train, valid) =
                    corpus.temporal_split(1.0 - config.validation_fraction)?;
                let (model, trace) = train_sequence_model(kind, &train, &valid, config, lambda)?;
                return Ok((
                    ModelBundle { train_digest, payload: Payload::Sequence(model) },
                    Some(trace),
                ));
            }
        };
        Ok((ModelBundle { train_digest, payload }, None))
    }

    pub fn kind(&self) -> ModelKind {
        match &self.payload {
            Payload::TopFrame => ModelKind::TopFrame,
            Payload::SecondFrame => ModelKind::SecondFrame,
            Payload::MostFreq(_) => ModelKind::MostFreqTopFrame,
            Payload::LogReg(_) => ModelKind::LogReg,
            Payload::Sequence(m) => m.kind,
        }
    }

    /// The TrainConfig the model was fit with, where one exists.
    pub fn config(&self) -> Option<&TrainConfig> {
        match &self.payload {
            Payload::LogReg(m) => Some(&m.config),
            Payload::Sequence(m) => Some(&m.config),
            _ => None,
        }
    }

    /// Blamed frame index plus attention weights when the model has them.
    pub fn predict(&self, stack: &[Frame], app: &str) -> Result<(usize, Option<Vec<f64>>)> {
        if stack.is_empty() {
            return Err(invalid("cannot predict on an empty stack"));
        }
        match &self.payload {
            Payload::TopFrame => Ok((predict_top(stack), None)),
            Payload::SecondFrame => Ok((predict_second(stack), None)),
            Payload::MostFreq(table) => Ok((predict_most_freq(table, stack), None)),
            Payload::LogReg(model) => Ok((predict_logreg(model, stack, app)?, None)),
            Payload::Sequence(model) => {
                let (index, alpha) = model.predict_blame(stack, app)?;
                Ok((index, Some(alpha)))
            }
        }
    }

    pub fn predict_record(&self, record: &CrashRecord) -> Result<(usize, Option<Vec<f64>>)> {
        self.predict(&record.stack, &record.app)
    }

    /// The sequence model inside, or a kind error for other payloads.
    pub fn as_sequence(&self) -> Result<&SequenceModel> {
        match &self.payload {
            Payload::Sequence(m) => Ok(m),
            _ => Err(wrong_kind("bilstm_crf_attn or deepanalyze", self.kind())),
        }
    }

    /// Serializes to the versioned binary format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.raw(MAGIC);
        w.u32(FORMAT_VERSION);
        let kind_index = ModelKind::ALL.iter().position(|k| *k == self.kind()).expect("known");
        w.u8(kind_index as u8);
        w.u64(self.train_digest);
        match &self.payload {
            Payload::TopFrame | Payload::SecondFrame => {}
            Payload::MostFreq(table) => {
                w.u64(table.counts.len() as u64);
                for (key, count) in &table.counts {
                    w.string(key);
                    w.u64(*count);
                }
            }
            Payload::LogReg(m) => {
                w.config(&m.config);
                w.vocab(&m.vocab);
                w.tensor(&m.w);
                w.f64(m.bias);
            }
            Payload::Sequence(m) => {
                w.f64(m.lambda);
                w.u32(m.classes.len() as u32);
                for class in &m.classes {
                    w.string(class);
                }
                w.config(&m.config);
                w.vocab(&m.vocab);
                let tensors = m.params.tensors();
                w.u32(tensors.len() as u32);
                for t in tensors {
                    w.tensor(t);
                }
            }
        }
        let checksum = fnv1a(&w.buf);
        w.u64(checksum);
        w.buf
    }

    /// Parses and validates the binary format (checksum first).
    pub fn from_bytes(bytes: &[u8]) -> Result<ModelBundle> {
        if bytes.len() < MAGIC.len() + 4 + 1 + 8 + 8 {
            return Err(model_file("file is too short to be a model bundle"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
        let computed = fnv1a(body);
        if stored != computed {
            return Err(model_file(format!(
                "checksum mismatch (stored {stored:#018x}, computed {computed:#018x}); file is corrupt"
            )));
        }

        let mut r = Reader { buf: body, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(model_file("not a model bundle (bad magic)"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(model_file(format!(
                "unsupported format version {version} (this build reads {FORMAT_VERSION})"
            )));
        }
        let kind_index = r.u8()? as usize;
        let kind = *ModelKind::ALL
            .get(kind_index)
            .ok_or_else(|| model_file(format!("unknown model kind byte {kind_index}")))?;
        let train_digest = r.u64()?;

        let payload = match kind {
            ModelKind::TopFrame => Payload::TopFrame,
            ModelKind::SecondFrame => Payload::SecondFrame,
            ModelKind::MostFreqTopFrame => {
                let n = r.u64()?;
                let mut table = BlameFrequencyTable::default();
                for _ in 0..n {
                    let key = r.string()?;
                    let count = r.u64()?;
                    if count == 0 {
                        return Err(model_file("blame table stores a zero count"));
                    }
                    table.counts.insert(key, count);
                }
                Payload::MostFreq(table)
            }
            ModelKind::LogReg => {
                let config = r.config()?;
                let vocab = r.vocab()?;
                let w = r.tensor()?;
                let bias = r.f64()?;
                if w.len() != vocab.feature_dim() {
                    return Err(model_file("weight vector does not match the vocabulary"));
                }
                Payload::LogReg(LogRegModel { vocab, w, bias, config })
            }
            ModelKind::BiLstmCrfAttn | ModelKind::DeepAnalyze => {
                let lambda = r.f64()?;
                let n_classes = r.u32()? as usize;
                let classes: Vec<String> =
                    (0..n_classes).map(|_| r.string()).collect::<Result<_>>()?;
                let config = r.config()?;
                let vocab = r.vocab()?;
                let n_tensors = r.u32()? as usize;
                let tensors: Vec<Tensor> =
                    (0..n_tensors).map(|_| r.tensor()).collect::<Result<_>>()?;
                let params = params_from_tensors(tensors, kind == ModelKind::DeepAnalyze)?;
                let model = SequenceModel { kind, vocab, params, config, lambda, classes };
                validate_sequence(&model)?;
                Payload::Sequence(model)
            }
        };
        r.done()?;
        Ok(ModelBundle { train_digest, payload })
    }
}

/// Writes a bundle atomically (temp file + rename).
pub fn save_model(bundle: &ModelBundle, path: &Path) -> Result<()> {
    write_atomic(path, &bundle.to_bytes())
}

pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path)?;
    ModelBundle::from_bytes(&bytes)
}

fn model_file(message: impl Into<String>) -> Error {
    Error::ModelFile(message.into())
}

fn validate_sequence(model: &SequenceModel) -> Result<()> {
    let p = &model.params;
    let hidden = p.hidden_dim();
    let ok = p.input_dim() == model.vocab.feature_dim()
        && p.attention.state_dim() == 2 * hidden
        && p.emission_head.input_dim() == 4 * hidden
        && p.emission_head.output_dim() == crate::crf::N_TAGS
        && p.crf.trans.shape() == [crate::crf::N_STATES, crate::crf::N_STATES]
        && match &p.class_head {
            Some(head) => {
                head.input_dim() == 2 * hidden && head.output_dim() == model.classes.len()
            }
            None => model.classes.is_empty(),
        };
    if ok {
        Ok(())
    } else {
        Err(model_file("stored tensor shapes are inconsistent"))
    }
}

fn params_from_tensors(tensors: Vec<Tensor>, has_class_head: bool) -> Result<SequenceParams> {
    let expected = 24 + 4 + if has_class_head { 2 } else { 0 };
    if tensors.len() != expected {
        return Err(model_file(format!(
            "expected {expected} parameter tensors, found {}",
            tensors.len()
        )));
    }
    let mut it = tensors.into_iter();
    let lstm = |it: &mut std::vec::IntoIter<Tensor>| LstmParams {
        w_i: it.next().expect("counted"),
        w_f: it.next().expect("counted"),
        w_o: it.next().expect("counted"),
        w_g: it.next().expect("counted"),
        u_i: it.next().expect("counted"),
        u_f: it.next().expect("counted"),
        u_o: it.next().expect("counted"),
        u_g: it.next().expect("counted"),
        b_i: it.next().expect("counted"),
        b_f: it.next().expect("counted"),
        b_o: it.next().expect("counted"),
        b_g: it.next().expect("counted"),
    };
    let bilstm = BiLstm { fwd: lstm(&mut it), bwd: lstm(&mut it) };
    let attention = Attention { w: it.next().expect("counted") };
    let emission_head = Dense { w: it.next().expect("counted"), b: it.next().expect("counted") };
    let crf = CrfParams { trans: it.next().expect("counted") };
    let class_head = has_class_head
        .then(|| Dense { w: it.next().expect("counted"), b: it.next().expect("counted") });
    Ok(SequenceParams { bilstm, attention, emission_head, crf, class_head })
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.raw(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.raw(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.raw(&v.to_le_bytes());
    }

    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.raw(s.as_bytes());
    }

    fn tensor(&mut self, t: &Tensor) {
        self.u8(t.rank() as u8);
        for d in t.shape() {
            self.u64(*d as u64);
        }
        for v in t.data() {
            self.f64(*v);
        }
    }

    fn config(&mut self, c: &TrainConfig) {
        self.f64(c.learning_rate);
        self.u64(c.batch_size as u64);
        self.u64(c.max_epochs as u64);
        self.u64(c.patience as u64);
        self.f64(c.dropout);
        self.u64(c.hidden as u64);
        self.u64(c.seed);
        self.f64(c.validation_fraction);
    }

    fn vocab_part(&mut self, v: &TfIdfVocab) {
        self.u32(v.len() as u32);
        for token in &v.tokens {
            self.string(token);
        }
        for idf in &v.idf {
            self.f64(*idf);
        }
    }

    fn vocab(&mut self, v: &FeaturizerVocab) {
        self.vocab_part(&v.namespace);
        self.vocab_part(&v.method);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(model_file("unexpected end of model file"));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| model_file("model file holds invalid UTF-8"))
    }

    fn tensor(&mut self) -> Result<Tensor> {
        let rank = self.u8()? as usize;
        if !(1..=3).contains(&rank) {
            return Err(model_file(format!("tensor rank {rank} out of range")));
        }
        let mut shape = Vec::with_capacity(rank);
        let mut elements = 1u64;
        for _ in 0..rank {
            let d = self.u64()?;
            elements = elements.saturating_mul(d.max(1));
            shape.push(d as usize);
        }
        if elements > MAX_TENSOR_ELEMENTS {
            return Err(model_file("tensor dimensions are implausibly large"));
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(self.f64()?);
        }
        Tensor::from_vec(&shape, data).map_err(|e| model_file(e.to_string()))
    }

    fn config(&mut self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            learning_rate: self.f64()?,
            batch_size: self.u64()? as usize,
            max_epochs: self.u64()? as usize,
            patience: self.u64()? as usize,
            dropout: self.f64()?,
            hidden: self.u64()? as usize,
            seed: self.u64()?,
            validation_fraction: self.f64()?,
        })
    }

    fn vocab_part(&mut self) -> Result<TfIdfVocab> {
        let n = self.u32()? as usize;
        let tokens: Vec<String> = (0..n).map(|_| self.string()).collect::<Result<_>>()?;
        let idf: Vec<f64> = (0..n).map(|_| self.f64()).collect::<Result<_>>()?;
        Ok(TfIdfVocab::new(tokens, idf))
    }

    fn vocab(&mut self) -> Result<FeaturizerVocab> {
        Ok(FeaturizerVocab { namespace: self.vocab_part()?, method: self.vocab_part()? })
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(model_file(format!(
                "{} trailing bytes after the model payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}
