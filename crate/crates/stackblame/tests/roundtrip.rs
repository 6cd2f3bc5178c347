//! Property tests for the lossless boundaries: frame fields to symbolized
//! text and back, corpora to JSON lines on disk and back, and trained models
//! to bytes and back. Strategies stay inside the documented frame grammar
//! where exact inversion is promised, and range over arbitrary text where
//! the promise is only totality and canonical idempotence.

use proptest::prelude::*;

use stackblame::corpus::{
    format_frame, generate, load_corpus, parse_frame, save_corpus, Corpus, CrashRecord, Frame,
    GeneratorConfig,
};
use stackblame::model::{ModelBundle, ModelKind};
use stackblame::nn::TrainConfig;

// --------------------------------------------------------------------------
// Strategies
// --------------------------------------------------------------------------

/// Module names: realistic `name.dll`-style files, bare tokens, or missing.
fn binary() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z][a-z0-9_]{0,11}\\.(dll|exe|sys)",
        2 => "[A-Za-z][A-Za-z0-9_.]{0,14}",
        1 => Just(String::new()),
    ]
}

fn identifier() -> impl Strategy<Value = String> {
    "[A-Za-z_][A-Za-z0-9_]{0,14}".prop_map(|s| s)
}

/// Method name; occasionally empty, which the grammar tolerates.
fn method() -> impl Strategy<Value = String> {
    prop_oneof![9 => identifier(), 1 => Just(String::new())]
}

/// `::`-joined namespace path, possibly empty, with optional templated
/// segments such as `[IDXGISwapChain4]`.
fn namespace() -> impl Strategy<Value = String> {
    let segment = prop_oneof![4 => identifier(), 1 => "\\[[A-Za-z0-9_]{1,12}\\]"];
    prop::collection::vec(segment, 0..4).prop_map(|s| s.join("::"))
}

/// Grammar-consistent frames. The one shape excluded is the fully empty
/// frame, whose formatted text carries no information to invert.
fn frame() -> impl Strategy<Value = Frame> {
    (binary(), namespace(), method(), prop::option::of(any::<u64>()))
        .prop_map(|(b, ns, m, off)| Frame::from_parts(&b, &ns, &m, off))
        .prop_filter("fully empty frames format to nothing", |f| !f.is_empty())
}

fn record(max_depth: usize) -> impl Strategy<Value = CrashRecord> {
    (
        prop::collection::vec(frame(), 1..=max_depth),
        any::<prop::sample::Index>(),
        proptest::bool::ANY,
        "[A-Z][A-Z_]{0,19}",
        "[a-z]{1,8}",
        any::<i64>(),
    )
        .prop_map(|(stack, blame, labeled, class, app, ts)| {
            let blame = labeled.then(|| blame.index(stack.len()));
            CrashRecord::new(stack, blame, &class, &app, ts).expect("valid record")
        })
}

/// Records whose stacks come from parsing arbitrary printable text, the way
/// real symbolized logs enter the system.
fn parsed_record() -> impl Strategy<Value = CrashRecord> {
    (
        prop::collection::vec("\\PC{0,40}", 1..8),
        any::<prop::sample::Index>(),
        any::<i64>(),
    )
        .prop_map(|(lines, blame, ts)| {
            let stack: Vec<Frame> = lines.iter().map(|s| parse_frame(s)).collect();
            let blame = Some(blame.index(stack.len()));
            CrashRecord::new(stack, blame, "APPLICATION_FAULT", "app", ts).expect("valid record")
        })
}

// --------------------------------------------------------------------------
// Frame text
// --------------------------------------------------------------------------

proptest! {
    /// Inside the grammar, formatting and reparsing reproduces every field,
    /// including the unknown flags and the canonical raw text.
    #[test]
    fn frames_round_trip_through_their_text(f in frame()) {
        let text = format_frame(&f);
        prop_assert_eq!(&parse_frame(&text), &f);
        prop_assert_eq!(text, f.raw);
    }

    /// Parsing is total over printable text and canonicalization settles in
    /// one step: format(parse(s)) is a fixed point of the pair.
    #[test]
    fn canonicalization_is_idempotent(s in "\\PC{0,60}") {
        let once = format_frame(&parse_frame(&s));
        let twice = format_frame(&parse_frame(&once));
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(parse_frame(&once).raw, once);
    }

    /// The method key identifies a method across re-reports: offsets differ,
    /// the key does not.
    #[test]
    fn method_key_ignores_offset(
        b in binary(),
        ns in namespace(),
        m in identifier(),
        o1 in prop::option::of(any::<u64>()),
        o2 in prop::option::of(any::<u64>()),
    ) {
        let first = Frame::from_parts(&b, &ns, &m, o1);
        let second = Frame::from_parts(&b, &ns, &m, o2);
        prop_assert_eq!(first.method_key(), second.method_key());
    }
}

// --------------------------------------------------------------------------
// Corpus files
// --------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A corpus of grammar-consistent records survives the disk round trip
    /// exactly, labels, timestamps, and dedup hashes included.
    #[test]
    fn corpora_survive_the_disk_round_trip(records in prop::collection::vec(record(10), 1..16)) {
        let corpus = Corpus::new(records);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&corpus, &path).unwrap();
        prop_assert_eq!(load_corpus(&path).unwrap(), corpus);
    }

    /// Stacks parsed from arbitrary text keep their raw lines through the
    /// file format, because the wire form stores exactly the raw text.
    #[test]
    fn parsed_stacks_survive_the_disk_round_trip(records in prop::collection::vec(parsed_record(), 1..8)) {
        let corpus = Corpus::new(records);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&corpus, &path).unwrap();
        prop_assert_eq!(load_corpus(&path).unwrap(), corpus);
    }

    /// Re-reports of the same crash differ only in timestamp; dedup keeps
    /// the first and drops the rest.
    #[test]
    fn rereports_collapse_under_dedup(r in record(8), later in 1..1_000_000i64) {
        let rereport = CrashRecord::new(
            r.stack.clone(),
            r.blame_index,
            &r.problem_class,
            &r.app,
            r.timestamp.saturating_add(later),
        )
        .unwrap();
        prop_assert_eq!(r.dedup_hash, rereport.dedup_hash);
        let deduped = Corpus::new(vec![r.clone(), rereport]).dedup();
        prop_assert_eq!(deduped.records.len(), 1);
        prop_assert_eq!(deduped.records[0].timestamp, r.timestamp);
    }
}

// --------------------------------------------------------------------------
// Model bytes
// --------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Every cheap model kind serializes losslessly whatever the training
    /// seed; the expensive sequence kinds get the same treatment at scale in
    /// the acceptance gate.
    #[test]
    fn trained_models_round_trip_through_bytes(
        kind in prop::sample::select(vec![
            ModelKind::TopFrame,
            ModelKind::SecondFrame,
            ModelKind::MostFreqTopFrame,
            ModelKind::LogReg,
        ]),
        seed in any::<u64>(),
    ) {
        let corpus = generate(&GeneratorConfig {
            record_count: 200,
            seed: 17,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let config = TrainConfig { seed, max_epochs: 2, hidden: 8, ..TrainConfig::default() };
        let (bundle, _) = ModelBundle::train(kind, &corpus, &config, 0.0).unwrap();
        let restored = ModelBundle::from_bytes(&bundle.to_bytes()).unwrap();
        prop_assert_eq!(&restored, &bundle);
        for record in corpus.records.iter().take(20) {
            prop_assert_eq!(
                restored.predict_record(record).unwrap(),
                bundle.predict_record(record).unwrap()
            );
        }
    }
}
