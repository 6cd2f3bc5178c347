//! Crash-record corpus: records, deduplication, temporal splitting, disk
//! round-trips, and the synthetic generator.
//!
//! A record is a symbolized stack plus its blame label, problem class, app
//! name, and timestamp. Dedup identity is a platform-independent FNV-1a hash
//! over everything except the timestamp, so re-reports of the same crash on
//! different days collapse to one record.

mod frame;
pub mod generate;
mod io;

pub use frame::{format_frame, parse_frame, Frame};
pub use generate::{generate, generate_record, rule_blame, GeneratorConfig};
pub use io::{load_corpus, save_corpus, write_atomic};

use std::collections::HashSet;

use crate::error::{invalid, Result};

/// Stacks longer than this are rejected at construction.
pub const MAX_STACK_DEPTH: usize = 255;

/// 64-bit FNV-1a over a byte stream. Hand-rolled so hashes are identical
/// across platforms and releases, unlike `DefaultHasher`.
#[derive(Debug, Clone)]
pub struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Fnv1a {
        Fnv1a(Self::OFFSET_BASIS)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn update_u64(&mut self, value: u64) {
        self.update(&value.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// Convenience: FNV-1a of one byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a::new();
    h.update(bytes);
    h.finish()
}

/// One labeled crash report.
#[derive(Debug, Clone, PartialEq)]
pub struct CrashRecord {
    /// Frames ordered top (crash point) to bottom (process entry).
    pub stack: Vec<Frame>,
    /// Index of the blamed frame; `None` for unlabeled records.
    pub blame_index: Option<usize>,
    /// Problem class label, e.g. `INVALID_POINTER_READ`.
    pub problem_class: String,
    /// Application the report came from.
    pub app: String,
    /// Unix seconds; only used for temporal ordering.
    pub timestamp: i64,
    /// Duplicate-detection hash; excludes the timestamp.
    pub dedup_hash: u64,
}

impl CrashRecord {
    /// Builds a record, validating depth and blame bounds and computing the
    /// dedup hash.
    pub fn new(
        stack: Vec<Frame>,
        blame_index: Option<usize>,
        problem_class: &str,
        app: &str,
        timestamp: i64,
    ) -> Result<CrashRecord> {
        if stack.is_empty() {
            return Err(invalid("record has an empty stack"));
        }
        if stack.len() > MAX_STACK_DEPTH {
            return Err(invalid(format!(
                "stack depth {} exceeds the cap of {MAX_STACK_DEPTH}",
                stack.len()
            )));
        }
        if let Some(b) = blame_index {
            if b >= stack.len() {
                return Err(invalid(format!(
                    "blame index {b} out of range for depth {}",
                    stack.len()
                )));
            }
        }
        let dedup_hash = record_hash(&stack, blame_index, problem_class, app);
        Ok(CrashRecord {
            stack,
            blame_index,
            problem_class: problem_class.to_string(),
            app: app.to_string(),
            timestamp,
            dedup_hash,
        })
    }

    /// Stack depth.
    pub fn depth(&self) -> usize {
        self.stack.len()
    }
}

/// Dedup hash over ordered frame texts, blame index, problem class, and app.
/// The timestamp is deliberately excluded. Fields are separated by a 0xFF
/// byte, which cannot occur inside UTF-8 text.
pub fn record_hash(
    stack: &[Frame],
    blame_index: Option<usize>,
    problem_class: &str,
    app: &str,
) -> u64 {
    let mut h = Fnv1a::new();
    for frame in stack {
        h.update(frame.raw.as_bytes());
        h.update(&[0xFF]);
    }
    match blame_index {
        Some(b) => {
            h.update(&[0x01]);
            h.update_u64(b as u64);
        }
        None => h.update(&[0x00]),
    }
    h.update(problem_class.as_bytes());
    h.update(&[0xFF]);
    h.update(app.as_bytes());
    h.update(&[0xFF]);
    h.finish()
}

/// An ordered collection of crash records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<CrashRecord>,
}

impl Corpus {
    pub fn new(records: Vec<CrashRecord>) -> Corpus {
        Corpus { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Drops duplicate records, keeping the first occurrence of each dedup
    /// hash. Input order is otherwise preserved.
    pub fn dedup(&self) -> Corpus {
        let mut seen = HashSet::with_capacity(self.records.len());
        let records = self
            .records
            .iter()
            .filter(|r| seen.insert(r.dedup_hash))
            .cloned()
            .collect();
        Corpus { records }
    }

    /// Splits into (train, eval) with the oldest `train_fraction` of records
    /// in train. Records are ordered by `(timestamp, dedup_hash)` first, so
    /// the split is invariant to input permutation even with tied
    /// timestamps. The train size is `round(n * fraction)` clamped so both
    /// sides are non-empty.
    pub fn temporal_split(&self, train_fraction: f64) -> Result<(Corpus, Corpus)> {
        if self.records.len() < 2 {
            return Err(invalid(format!(
                "temporal split needs at least 2 records, got {}",
                self.records.len()
            )));
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(invalid(format!(
                "train fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        let mut ordered: Vec<&CrashRecord> = self.records.iter().collect();
        ordered.sort_by_key(|r| (r.timestamp, r.dedup_hash));
        let n = ordered.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        let train = ordered[..n_train].iter().map(|r| (*r).clone()).collect();
        let eval = ordered[n_train..].iter().map(|r| (*r).clone()).collect();
        Ok((Corpus::new(train), Corpus::new(eval)))
    }

    /// Sorted list of distinct problem classes present in the corpus.
    pub fn problem_classes(&self) -> Vec<String> {
        let mut classes: Vec<String> = self
            .records
            .iter()
            .map(|r| r.problem_class.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        classes.sort();
        classes
    }

    /// Sorted list of distinct app names present in the corpus.
    pub fn apps(&self) -> Vec<String> {
        let mut apps: Vec<String> = self
            .records
            .iter()
            .map(|r| r.app.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        apps.sort();
        apps
    }

    /// Records from a single app.
    pub fn filter_app(&self, app: &str) -> Corpus {
        Corpus::new(
            self.records
                .iter()
                .filter(|r| r.app == app)
                .cloned()
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ts: i64, method: &str, blame: Option<usize>) -> CrashRecord {
        let stack = vec![
            Frame::from_parts("app.dll", "core", method, None),
            Frame::from_parts("ntdll.dll", "", "RtlUserThreadStart", None),
        ];
        CrashRecord::new(stack, blame, "APPLICATION_FAULT", "app", ts).unwrap()
    }

    #[test]
    fn fnv1a_matches_reference_vectors() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn hash_ignores_timestamp() {
        let a = record(100, "Tick", Some(0));
        let b = record(999, "Tick", Some(0));
        assert_eq!(a.dedup_hash, b.dedup_hash);
    }

    #[test]
    fn hash_covers_labelled_fields() {
        let base = record(0, "Tick", Some(0));
        assert_ne!(base.dedup_hash, record(0, "Tock", Some(0)).dedup_hash);
        assert_ne!(base.dedup_hash, record(0, "Tick", Some(1)).dedup_hash);
        assert_ne!(base.dedup_hash, record(0, "Tick", None).dedup_hash);
        let other_class = CrashRecord::new(
            base.stack.clone(),
            base.blame_index,
            "HEAP_CORRUPTION",
            "app",
            0,
        )
        .unwrap();
        assert_ne!(base.dedup_hash, other_class.dedup_hash);
        let other_app =
            CrashRecord::new(base.stack.clone(), base.blame_index, "APPLICATION_FAULT", "other", 0)
                .unwrap();
        assert_ne!(base.dedup_hash, other_app.dedup_hash);
    }

    #[test]
    fn construction_validates_bounds() {
        assert!(CrashRecord::new(vec![], None, "C", "a", 0).is_err());
        let deep = vec![Frame::from_parts("a.dll", "", "F", None); MAX_STACK_DEPTH + 1];
        assert!(CrashRecord::new(deep, None, "C", "a", 0).is_err());
        let stack = vec![Frame::from_parts("a.dll", "", "F", None)];
        assert!(CrashRecord::new(stack.clone(), Some(1), "C", "a", 0).is_err());
        assert!(CrashRecord::new(stack, Some(0), "C", "a", 0).is_ok());
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let corpus = Corpus::new(vec![
            record(1, "A", Some(0)),
            record(2, "A", Some(0)), // same hash, newer timestamp
            record(3, "B", Some(0)),
        ]);
        let deduped = corpus.dedup();
        assert_eq!(deduped.len(), 2);
        assert_eq!(deduped.records[0].timestamp, 1);
        assert_eq!(deduped.records[1].timestamp, 3);
    }

    #[test]
    fn split_fractions_and_bounds() {
        let corpus = Corpus::new((0..14).map(|i| record(i, &format!("M{i}"), Some(0))).collect());
        let (train, eval) = corpus.temporal_split(11.0 / 14.0).unwrap();
        assert_eq!((train.len(), eval.len()), (11, 3));
        assert!(train.records.iter().all(|r| r.timestamp < 11));

        let two = Corpus::new(vec![record(0, "A", None), record(1, "B", None)]);
        let (t, e) = two.temporal_split(0.99).unwrap();
        assert_eq!((t.len(), e.len()), (1, 1));

        assert!(Corpus::new(vec![record(0, "A", None)]).temporal_split(0.5).is_err());
        assert!(two.temporal_split(0.0).is_err());
        assert!(two.temporal_split(1.0).is_err());
    }

    #[test]
    fn split_is_permutation_invariant() {
        let mut records: Vec<CrashRecord> =
            (0..20).map(|i| record(i / 3, &format!("M{i}"), Some(0))).collect();
        let forward = Corpus::new(records.clone());
        records.reverse();
        let backward = Corpus::new(records);
        let (ft, fe) = forward.temporal_split(0.6).unwrap();
        let (bt, be) = backward.temporal_split(0.6).unwrap();
        assert_eq!(ft, bt);
        assert_eq!(fe, be);
    }
}
