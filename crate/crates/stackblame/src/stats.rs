//! Corpus statistics: depth and binary-count distributions, blame-location
//! histograms, per-method blame ratios, and problem-class frequencies.
//!
//! These are the numbers used to sanity-check a corpus against real crash
//! telemetry (median depth around 9, two thirds of blames on the top frame,
//! memory classes dominating) before any model sees it.

use std::collections::{BTreeMap, HashSet};

use crate::corpus::{Corpus, CrashRecord};
use crate::error::{invalid, Result};

/// Problem classes counted as memory-related by default.
pub const DEFAULT_MEMORY_CLASSES: &[&str] = &[
    "INVALID_POINTER_READ",
    "INVALID_POINTER_WRITE",
    "NULL_POINTER_READ",
    "NULL_CLASS_PTR_READ",
    "HEAP_CORRUPTION",
];

/// Stack-depth distribution summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthStats {
    /// depth -> record count
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
    pub median: f64,
}

/// Distinct-binaries-per-stack distribution summary.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryStats {
    /// distinct binary count -> record count
    pub histogram: BTreeMap<usize, usize>,
    pub mean: f64,
}

/// Blame statistics for one method key.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodBlameRatio {
    /// Stacks in which the method was blamed.
    pub blamed: usize,
    /// Stacks in which the method appears at all.
    pub appearances: usize,
    /// `blamed / appearances`.
    pub ratio: f64,
}

/// Problem-class counts plus the memory-related share.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    /// (class, count), by descending count then name.
    pub counts: Vec<(String, usize)>,
    /// Fraction of records whose class is memory-related.
    pub memory_share: f64,
}

/// Everything `corpus_stats` computes in one pass-friendly bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub records: usize,
    pub labeled_records: usize,
    pub depth: DepthStats,
    pub binaries: BinaryStats,
    /// Fraction of labeled records blamed at frame 0.
    pub top_frame_share: f64,
    /// Normalized blame-location histogram over [0, 1] in 20 buckets.
    pub blame_histogram: Vec<usize>,
    pub classes: ClassStats,
}

/// Number of buckets in the blame-location histogram.
pub const BLAME_HISTOGRAM_BUCKETS: usize = 20;

/// Depth histogram, mean, and median. Errors on an empty corpus.
pub fn depth_distribution(corpus: &Corpus) -> Result<DepthStats> {
    if corpus.is_empty() {
        return Err(invalid("depth distribution of an empty corpus"));
    }
    let mut histogram = BTreeMap::new();
    let mut depths: Vec<usize> = Vec::with_capacity(corpus.len());
    for record in &corpus.records {
        *histogram.entry(record.depth()).or_insert(0) += 1;
        depths.push(record.depth());
    }
    depths.sort_unstable();
    let mean = depths.iter().sum::<usize>() as f64 / depths.len() as f64;
    let median = if depths.len() % 2 == 1 {
        depths[depths.len() / 2] as f64
    } else {
        (depths[depths.len() / 2 - 1] + depths[depths.len() / 2]) as f64 / 2.0
    };
    Ok(DepthStats { histogram, mean, median })
}

/// Distinct non-empty binary names per stack. Errors on an empty corpus.
pub fn distinct_binaries_per_stack(corpus: &Corpus) -> Result<BinaryStats> {
    if corpus.is_empty() {
        return Err(invalid("binary distribution of an empty corpus"));
    }
    let mut histogram = BTreeMap::new();
    let mut total = 0usize;
    for record in &corpus.records {
        let distinct: HashSet<&str> = record
            .stack
            .iter()
            .filter(|f| !f.binary.is_empty())
            .map(|f| f.binary.as_str())
            .collect();
        *histogram.entry(distinct.len()).or_insert(0) += 1;
        total += distinct.len();
    }
    let mean = total as f64 / corpus.len() as f64;
    Ok(BinaryStats { histogram, mean })
}

/// Blame position normalized to [0, 1]: `blame / (depth - 1)`, and 0 for
/// single-frame stacks. Errors on unlabeled records.
pub fn normalized_blame_location(record: &CrashRecord) -> Result<f64> {
    let blame = record
        .blame_index
        .ok_or_else(|| invalid("normalized blame location of an unlabeled record"))?;
    if record.depth() == 1 {
        Ok(0.0)
    } else {
        Ok(blame as f64 / (record.depth() - 1) as f64)
    }
}

/// Per-method blame ratio over labeled records. A method "appears" in a
/// stack if any frame carries its key; unlabeled records contribute
/// appearances only. Method identity is `binary!namespace::method`.
pub fn blame_ratio(corpus: &Corpus) -> BTreeMap<String, MethodBlameRatio> {
    let mut table: BTreeMap<String, MethodBlameRatio> = BTreeMap::new();
    for record in &corpus.records {
        let mut seen: HashSet<String> = HashSet::new();
        for frame in &record.stack {
            seen.insert(frame.method_key());
        }
        for key in seen {
            let entry = table
                .entry(key)
                .or_insert(MethodBlameRatio { blamed: 0, appearances: 0, ratio: 0.0 });
            entry.appearances += 1;
        }
        if let Some(b) = record.blame_index {
            let key = record.stack[b].method_key();
            table.get_mut(&key).expect("blamed key was just inserted").blamed += 1;
        }
    }
    for entry in table.values_mut() {
        entry.ratio = entry.blamed as f64 / entry.appearances as f64;
    }
    table
}

/// Class counts (descending) and the memory-related share under `memory_classes`.
pub fn problem_class_frequencies(corpus: &Corpus, memory_classes: &[&str]) -> Result<ClassStats> {
    if corpus.is_empty() {
        return Err(invalid("class frequencies of an empty corpus"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for record in &corpus.records {
        *counts.entry(record.problem_class.as_str()).or_insert(0) += 1;
    }
    let memory: usize = counts
        .iter()
        .filter(|(class, _)| memory_classes.contains(*class))
        .map(|(_, n)| n)
        .sum();
    let mut counts: Vec<(String, usize)> =
        counts.into_iter().map(|(c, n)| (c.to_string(), n)).collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ClassStats { counts, memory_share: memory as f64 / corpus.len() as f64 })
}

/// All corpus statistics in one call. Blame-dependent numbers cover the
/// labeled subset; depth and binary stats cover every record.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    let depth = depth_distribution(corpus)?;
    let binaries = distinct_binaries_per_stack(corpus)?;
    let classes = problem_class_frequencies(corpus, DEFAULT_MEMORY_CLASSES)?;

    let mut blame_histogram = vec![0usize; BLAME_HISTOGRAM_BUCKETS];
    let mut labeled = 0usize;
    let mut top = 0usize;
    for record in &corpus.records {
        if record.blame_index.is_none() {
            continue;
        }
        labeled += 1;
        if record.blame_index == Some(0) {
            top += 1;
        }
        let loc = normalized_blame_location(record)?;
        let bucket = ((loc * BLAME_HISTOGRAM_BUCKETS as f64) as usize)
            .min(BLAME_HISTOGRAM_BUCKETS - 1);
        blame_histogram[bucket] += 1;
    }
    let top_frame_share = if labeled == 0 { 0.0 } else { top as f64 / labeled as f64 };

    Ok(CorpusStats {
        records: corpus.len(),
        labeled_records: labeled,
        depth,
        binaries,
        top_frame_share,
        blame_histogram,
        classes,
    })
}

impl CorpusStats {
    /// Renders the stats as `(file name, CSV content)` pairs for `analyze`.
    pub fn to_csv_files(&self, ratios: &BTreeMap<String, MethodBlameRatio>) -> Vec<(&'static str, String)> {
        let mut depth_csv = String::from("depth,count\n");
        for (depth, count) in &self.depth.histogram {
            depth_csv.push_str(&format!("{depth},{count}\n"));
        }

        let mut bin_csv = String::from("distinct_binaries,count\n");
        for (n, count) in &self.binaries.histogram {
            bin_csv.push_str(&format!("{n},{count}\n"));
        }

        let mut blame_csv = String::from("bucket_low,bucket_high,count\n");
        let w = 1.0 / BLAME_HISTOGRAM_BUCKETS as f64;
        for (i, count) in self.blame_histogram.iter().enumerate() {
            blame_csv.push_str(&format!("{:.2},{:.2},{count}\n", i as f64 * w, (i + 1) as f64 * w));
        }

        let mut class_csv = String::from("class,count,share\n");
        for (class, count) in &self.classes.counts {
            class_csv.push_str(&format!(
                "{class},{count},{:.6}\n",
                *count as f64 / self.records as f64
            ));
        }

        let mut ratio_csv = String::from("method,blamed,appearances,ratio\n");
        for (key, r) in ratios {
            ratio_csv.push_str(&format!(
                "\"{}\",{},{},{:.6}\n",
                key.replace('"', "\"\""),
                r.blamed,
                r.appearances,
                r.ratio
            ));
        }

        vec![
            ("depth_distribution.csv", depth_csv),
            ("binaries_per_stack.csv", bin_csv),
            ("blame_location.csv", blame_csv),
            ("problem_classes.csv", class_csv),
            ("blame_ratio.csv", ratio_csv),
        ]
    }

    /// Short human-readable summary for CLI output.
    pub fn summary(&self) -> String {
        format!(
            "records: {}\nlabeled: {}\ndepth mean/median: {:.2}/{:.1}\n\
             distinct binaries per stack (mean): {:.2}\ntop-frame blame share: {:.4}\n\
             memory-class share: {:.4}\n",
            self.records,
            self.labeled_records,
            self.depth.mean,
            self.depth.median,
            self.binaries.mean,
            self.top_frame_share,
            self.classes.memory_share
        )
    }
}
