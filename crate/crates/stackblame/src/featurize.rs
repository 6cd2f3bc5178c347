//! Frame featurization: identifier tokenization, tf-idf vocabularies over
//! namespace and method tokens, and the per-frame feature vector consumed by
//! every learned model.
//!
//! A frame's vector is `[namespace tf-idf | method tf-idf | 10 engineered
//! features]`, in that order, so the total dimension is `2n + 10` for a
//! vocabulary of `n` tokens per field. Vocabularies are fit on training
//! corpora only and shipped inside model bundles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CrashRecord, Frame};
use crate::error::{invalid, Result};
use crate::nn::tensor::SparseRows;

/// Default tokens kept per field vocabulary.
pub const DEFAULT_TFIDF_DIM: usize = 64;

/// Number of engineered (non-tf-idf) features per frame.
pub const ENGINEERED_FEATURES: usize = 10;

/// Tokens that mark exception machinery for `is_exception_in_frame`.
const EXCEPTION_TOKENS: &[&str] = &["exception", "throw", "rethrow", "raise", "dispatch"];

/// Splits an identifier into lowercase tokens. Boundaries are `::`,
/// underscores, any other non-alphanumeric byte, digit runs, and camelCase
/// transitions including upper-run-then-lower (`GLSurface` -> `gl`,
/// `surface`).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();

    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current));
        }
    };

    for i in 0..chars.len() {
        let c = chars[i];
        if !c.is_alphanumeric() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if !current.is_empty() {
            let prev = chars[i - 1];
            let boundary = if c.is_ascii_digit() != prev.is_ascii_digit() {
                // Letter/digit transition in either direction.
                true
            } else if c.is_uppercase() && prev.is_lowercase() {
                // camelCase step: fooBar -> foo, bar.
                true
            } else if c.is_lowercase()
                && prev.is_uppercase()
                && i >= 2
                && chars[i - 2].is_uppercase()
            {
                // Upper run followed by a word: GLSurface -> gl, surface.
                // The last upper char starts the new token.
                let carry = current.pop().expect("current is non-empty");
                flush(&mut current, &mut tokens);
                current.push(carry);
                false
            } else {
                false
            };
            if boundary {
                flush(&mut current, &mut tokens);
            }
        }
        current.extend(c.to_lowercase());
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// One field's tf-idf vocabulary: token list, lookup table, and idf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfVocab {
    /// Tokens in index order (by descending document frequency, ties by
    /// token text ascending).
    pub tokens: Vec<String>,
    /// idf per token, aligned with `tokens`.
    pub idf: Vec<f64>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

impl TfIdfVocab {
    pub fn new(tokens: Vec<String>, idf: Vec<f64>) -> TfIdfVocab {
        let lookup = tokens.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        TfIdfVocab { tokens, idf, lookup }
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn rebuild_lookup(&mut self) {
        self.lookup =
            self.tokens.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// L2-normalized tf-idf vector of one field's text.
    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.tokens.len()];
        for token in tokenize(text) {
            if let Some(&i) = self.lookup.get(&token) {
                v[i] += self.idf[i];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

/// The fitted featurizer: one vocabulary per tokenized field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerVocab {
    pub namespace: TfIdfVocab,
    pub method: TfIdfVocab,
}

impl FeaturizerVocab {
    /// Total feature dimension: both tf-idf blocks plus engineered features.
    pub fn feature_dim(&self) -> usize {
        self.namespace.len() + self.method.len() + ENGINEERED_FEATURES
    }

    /// Names for every feature index, used by importance reports.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.feature_dim());
        for t in &self.namespace.tokens {
            names.push(format!("namespace {t}"));
        }
        for t in &self.method.tokens {
            names.push(format!("method {t}"));
        }
        for n in [
            "is_appname_in_frame",
            "is_first_app_frame",
            "is_kernel_code",
            "is_ntdll_code",
            "is_exception_in_frame",
            "norm_frame_position",
            "is_method_unknown",
            "is_method_empty",
            "is_binary_unknown",
            "is_empty_frame",
        ] {
            names.push(n.to_string());
        }
        names
    }

    pub fn rebuild_lookups(&mut self) {
        self.namespace.rebuild_lookup();
        self.method.rebuild_lookup();
    }
}

/// Fits namespace and method vocabularies on a training corpus. Each frame
/// contributes one "document" per field; the top `n` tokens by document
/// frequency are kept (ties broken by token text), and
/// `idf = ln((1 + D) / (1 + df)) + 1` with `D` the total frame count.
pub fn fit_vocab(corpus: &Corpus, n: usize) -> Result<FeaturizerVocab> {
    if corpus.is_empty() {
        return Err(invalid("cannot fit a featurizer on an empty corpus"));
    }
    if n == 0 {
        return Err(invalid("vocabulary size must be at least 1"));
    }
    let mut namespace_df: HashMap<String, usize> = HashMap::new();
    let mut method_df: HashMap<String, usize> = HashMap::new();
    let mut frames = 0usize;
    for record in &corpus.records {
        for frame in &record.stack {
            frames += 1;
            for (field, df) in
                [(&frame.namespace, &mut namespace_df), (&frame.method, &mut method_df)]
            {
                let mut seen: Vec<String> = tokenize(field);
                seen.sort_unstable();
                seen.dedup();
                for token in seen {
                    *df.entry(token).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(FeaturizerVocab {
        namespace: build_vocab(namespace_df, n, frames),
        method: build_vocab(method_df, n, frames),
    })
}

fn build_vocab(df: HashMap<String, usize>, n: usize, total_docs: usize) -> TfIdfVocab {
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    let idf = ranked
        .iter()
        .map(|(_, df)| ((1 + total_docs) as f64 / (1 + df) as f64).ln() + 1.0)
        .collect();
    let tokens = ranked.into_iter().map(|(t, _)| t).collect();
    TfIdfVocab::new(tokens, idf)
}

/// Feature vectors for every frame of one stack, in stack order.
pub type StackFeatures = Vec<Vec<f64>>;

/// True when the frame's binary base name (text before the first `.`)
/// equals the app name case-insensitively. `msedge.dll` matches app
/// `msedge`; the side-by-side `msedge_elf.dll` does not.
pub fn appname_in_frame(frame: &Frame, app: &str) -> bool {
    if app.is_empty() || frame.binary.is_empty() {
        return false;
    }
    let base = frame.binary.split('.').next().unwrap_or("");
    base.eq_ignore_ascii_case(app)
}

fn contains_exception_token(frame: &Frame) -> bool {
    let mut tokens = tokenize(&frame.method);
    tokens.extend(tokenize(&frame.namespace));
    tokens.iter().any(|t| EXCEPTION_TOKENS.contains(&t.as_str()))
}

/// Featurizes a whole stack for app `app` as sparse rows — frame vectors are
/// overwhelmingly zeros, and the encoder has a fast path for that shape.
pub fn featurize_stack_sparse(
    stack: &[Frame],
    app: &str,
    vocab: &FeaturizerVocab,
) -> Result<SparseRows> {
    if stack.is_empty() {
        return Err(invalid("cannot featurize an empty stack"));
    }
    let depth = stack.len();
    let first_app = stack.iter().position(|f| appname_in_frame(f, app));
    let eng_base = vocab.namespace.len() + vocab.method.len();

    let mut rows = SparseRows::new(vocab.feature_dim());
    for (i, frame) in stack.iter().enumerate() {
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for (offset, block) in [
            (0, vocab.namespace.vector(&frame.namespace)),
            (vocab.namespace.len(), vocab.method.vector(&frame.method)),
        ] {
            for (j, x) in block.iter().enumerate() {
                if *x != 0.0 {
                    entries.push(((offset + j) as u32, *x));
                }
            }
        }

        let binary_lower = frame.binary.to_ascii_lowercase();
        let is_kernel = binary_lower.ends_with(".sys")
            || matches!(binary_lower.as_str(), "kernel32.dll" | "kernelbase.dll" | "win32u.dll");
        let norm_pos = if depth == 1 { 0.0 } else { i as f64 / (depth - 1) as f64 };

        let engineered = [
            appname_in_frame(frame, app) as u8 as f64,
            (first_app == Some(i)) as u8 as f64,
            is_kernel as u8 as f64,
            (binary_lower == "ntdll.dll") as u8 as f64,
            contains_exception_token(frame) as u8 as f64,
            norm_pos,
            (frame.method_unknown || frame.method == "unknown") as u8 as f64,
            frame.method.is_empty() as u8 as f64,
            frame.binary_unknown as u8 as f64,
            frame.is_empty() as u8 as f64,
        ];
        for (k, x) in engineered.iter().enumerate() {
            if *x != 0.0 {
                entries.push(((eng_base + k) as u32, *x));
            }
        }
        rows.push_row(entries);
    }
    Ok(rows)
}

/// Featurizes a whole stack for app `app`. Frame `i` of the result is the
/// dense vector for frame `i` of the stack.
pub fn featurize_stack(stack: &[Frame], app: &str, vocab: &FeaturizerVocab) -> Result<StackFeatures> {
    let sparse = featurize_stack_sparse(stack, app, vocab)?;
    Ok((0..sparse.len())
        .map(|t| {
            let mut row = vec![0.0; sparse.dim()];
            for &(j, v) in sparse.row(t) {
                row[j as usize] = v;
            }
            row
        })
        .collect())
}

/// Featurizes a record using its own app name.
pub fn featurize_record(record: &CrashRecord, vocab: &FeaturizerVocab) -> Result<StackFeatures> {
    featurize_stack(&record.stack, &record.app, vocab)
}

/// Sparse variant of [`featurize_record`].
pub fn featurize_record_sparse(
    record: &CrashRecord,
    vocab: &FeaturizerVocab,
) -> Result<SparseRows> {
    featurize_stack_sparse(&record.stack, &record.app, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_frame;

    #[test]
    fn tokenizer_handles_camel_case_and_digits() {
        assert_eq!(tokenize("PostSubBuffer"), ["post", "sub", "buffer"]);
        assert_eq!(tokenize("OpenAdapter10_2"), ["open", "adapter", "10", "2"]);
        assert_eq!(tokenize("GLSurfaceAdapter"), ["gl", "surface", "adapter"]);
        assert_eq!(tokenize("gl::GLSurfaceAdapter"), ["gl", "gl", "surface", "adapter"]);
        assert_eq!(tokenize("base::debug"), ["base", "debug"]);
        assert_eq!(tokenize("emplace_back"), ["emplace", "back"]);
        assert_eq!(tokenize("RtlUserThreadStart"), ["rtl", "user", "thread", "start"]);
        assert_eq!(tokenize("CxxThrowException"), ["cxx", "throw", "exception"]);
        assert_eq!(tokenize("[IDXGISwapChain4]"), ["idxgi", "swap", "chain", "4"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn idf_matches_hand_computation() {
        // Two single-frame records; token "error" in both methods, "io" in one.
        let stack = |m: &str| vec![Frame::from_parts("a.dll", "", m, None)];
        let corpus = Corpus::new(vec![
            CrashRecord::new(stack("ErrorIo"), Some(0), "C", "app", 0).unwrap(),
            CrashRecord::new(stack("ErrorPath"), Some(0), "C", "app", 1).unwrap(),
        ]);
        let vocab = fit_vocab(&corpus, 8).unwrap();
        // D = 2 frames. "error": df 2 -> ln(3/3)+1 = 1; "io": df 1 -> ln(3/2)+1.
        let error_idx = vocab.method.tokens.iter().position(|t| t == "error").unwrap();
        let io_idx = vocab.method.tokens.iter().position(|t| t == "io").unwrap();
        assert!((vocab.method.idf[error_idx] - 1.0).abs() < 1e-12);
        assert!((vocab.method.idf[io_idx] - (1.5f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tfidf_vector_uses_raw_tf_then_l2_normalizes() {
        // Document "error error io" with idf(error) = 1.2, idf(io) = 2.0:
        // raw weights (2.4, 2.0), then L2 normalization.
        let vocab = TfIdfVocab::new(vec!["error".into(), "io".into()], vec![1.2, 2.0]);
        let v = vocab.vector("error_error_io");
        let norm = (2.4f64 * 2.4 + 2.0 * 2.0).sqrt();
        assert!((v[0] - 2.4 / norm).abs() < 1e-12);
        assert!((v[1] - 2.0 / norm).abs() < 1e-12);
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocab_tokens_vanish() {
        let vocab = TfIdfVocab::new(vec!["known".into()], vec![1.0]);
        assert_eq!(vocab.vector("TotallyNovel"), vec![0.0]);
    }

    #[test]
    fn vocab_ranking_prefers_frequent_then_lexicographic() {
        let stack = |m: &str| vec![Frame::from_parts("a.dll", "", m, None)];
        let corpus = Corpus::new(vec![
            CrashRecord::new(stack("AlphaBeta"), Some(0), "C", "app", 0).unwrap(),
            CrashRecord::new(stack("AlphaGamma"), Some(0), "C", "app", 1).unwrap(),
        ]);
        let vocab = fit_vocab(&corpus, 2).unwrap();
        // alpha: df 2; beta/gamma: df 1 each, beta wins the tie.
        assert_eq!(vocab.method.tokens, vec!["alpha".to_string(), "beta".to_string()]);
    }

    #[test]
    fn appname_matching_is_exact_on_base_name() {
        let frame = |b: &str| Frame::from_parts(b, "", "F", None);
        assert!(appname_in_frame(&frame("msedge.dll"), "msedge"));
        assert!(appname_in_frame(&frame("MsEdge.DLL"), "msedge"));
        assert!(appname_in_frame(&frame("msedge.1.2.dll"), "msedge"));
        assert!(!appname_in_frame(&frame("msedge_elf.dll"), "msedge"));
        assert!(!appname_in_frame(&frame("notmsedge.dll"), "msedge"));
        assert!(!appname_in_frame(&frame("msedge.dll"), ""));
    }

    #[test]
    fn engineered_features_are_in_documented_order() {
        let vocab = FeaturizerVocab {
            namespace: TfIdfVocab::new(vec!["gl".into()], vec![1.0]),
            method: TfIdfVocab::new(vec!["buffer".into()], vec![1.0]),
        };
        let stack = vec![
            parse_frame("app_elf.dll!diag::Logger::LogMessage"),
            parse_frame("app.dll!gl::ThrowHelper::RaiseError"),
            parse_frame("ntdll.dll!RtlUserThreadStart"),
            parse_frame("garbage"),
        ];
        let feats = featurize_stack(&stack, "app", &vocab).unwrap();
        assert!(feats.iter().all(|f| f.len() == vocab.feature_dim()));

        let base = 2; // one namespace + one method slot
        // Frame 1 is the first (and only) app frame and mentions raise.
        assert_eq!(feats[1][base], 1.0, "is_appname_in_frame");
        assert_eq!(feats[1][base + 1], 1.0, "is_first_app_frame");
        assert_eq!(feats[0][base + 1], 0.0, "helper binary is not the app");
        assert_eq!(feats[1][base + 4], 1.0, "is_exception_in_frame");
        // Frame 2 is ntdll.
        assert_eq!(feats[2][base + 3], 1.0, "is_ntdll_code");
        assert_eq!(feats[2][base + 2], 0.0, "ntdll is not the kernel set");
        // Positions are i / (depth - 1).
        assert_eq!(feats[0][base + 5], 0.0);
        assert!((feats[1][base + 5] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(feats[3][base + 5], 1.0);
        // Frame 3 is unparseable garbage.
        assert_eq!(feats[3][base + 6], 1.0, "is_method_unknown");
        assert_eq!(feats[3][base + 7], 1.0, "is_method_empty");
        assert_eq!(feats[3][base + 8], 1.0, "is_binary_unknown");
        assert_eq!(feats[3][base + 9], 1.0, "is_empty_frame");
        assert_eq!(feats[1][base + 9], 0.0);
    }

    #[test]
    fn kernel_feature_covers_sys_drivers() {
        let vocab = FeaturizerVocab {
            namespace: TfIdfVocab::new(vec!["x".into()], vec![1.0]),
            method: TfIdfVocab::new(vec!["x".into()], vec![1.0]),
        };
        let stack = vec![parse_frame("rtkvhd64.sys!DispatchIo")];
        let feats = featurize_stack(&stack, "app", &vocab).unwrap();
        assert_eq!(feats[0][2 + 2], 1.0, "is_kernel_code for .sys");
    }

    #[test]
    fn single_frame_stack_position_is_zero() {
        let vocab = FeaturizerVocab {
            namespace: TfIdfVocab::new(vec!["x".into()], vec![1.0]),
            method: TfIdfVocab::new(vec!["x".into()], vec![1.0]),
        };
        let feats =
            featurize_stack(&[parse_frame("a.dll!Ns::F")], "a", &vocab).unwrap();
        assert_eq!(feats[0][2 + 5], 0.0);
    }

    #[test]
    fn feature_names_align_with_dimension() {
        let vocab = FeaturizerVocab {
            namespace: TfIdfVocab::new(vec!["a".into(), "b".into()], vec![1.0, 1.0]),
            method: TfIdfVocab::new(vec!["c".into()], vec![1.0]),
        };
        let names = vocab.feature_names();
        assert_eq!(names.len(), vocab.feature_dim());
        assert_eq!(names[0], "namespace a");
        assert_eq!(names[2], "method c");
        assert_eq!(names[3], "is_appname_in_frame");
        assert_eq!(names.last().unwrap(), "is_empty_frame");
    }
}
