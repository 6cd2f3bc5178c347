//! Corpus statistics: depth distribution, blame locations, per-method blame
//! ratios, and problem-class shares.
//!
//! ```sh
//! cargo run --example corpus_stats
//! ```

use stackblame::corpus::{generate, GeneratorConfig};
use stackblame::stats::{blame_ratio, corpus_stats};

fn main() -> stackblame::Result<()> {
    let config = GeneratorConfig::default().with_records(20_000).with_seed(7);
    let corpus = generate(&config)?;
    let stats = corpus_stats(&corpus)?;

    print!("{}", stats.summary());

    // Depth histogram, bucketed for display.
    println!("\nstack depth:");
    let mut buckets = [0usize; 8];
    for (depth, count) in &stats.depth.histogram {
        let b = match depth {
            1..=2 => 0,
            3..=5 => 1,
            6..=9 => 2,
            10..=15 => 3,
            16..=25 => 4,
            26..=40 => 5,
            41..=80 => 6,
            _ => 7,
        };
        buckets[b] += count;
    }
    let labels = ["1-2", "3-5", "6-9", "10-15", "16-25", "26-40", "41-80", "81+"];
    let max = buckets.iter().max().copied().unwrap_or(1).max(1);
    for (label, count) in labels.iter().zip(buckets) {
        println!("  {label:>6} {:<50} {count}", "#".repeat(50 * count / max));
    }

    // Where in the stack do blames land, normalized to [0, 1]?
    println!("\nnormalized blame location (0 = top of stack):");
    let max = stats.blame_histogram.iter().max().copied().unwrap_or(1).max(1);
    for (i, count) in stats.blame_histogram.iter().enumerate() {
        let lo = i as f64 / stats.blame_histogram.len() as f64;
        println!("  {lo:>4.2} {:<50} {count}", "#".repeat(50 * count / max));
    }

    // Methods that are blamed in most of the stacks they appear in.
    let ratios = blame_ratio(&corpus);
    let mut prone: Vec<_> = ratios.iter().filter(|(_, r)| r.appearances >= 100).collect();
    prone.sort_by(|a, b| b.1.ratio.total_cmp(&a.1.ratio).then(a.0.cmp(b.0)));
    println!("\nmost blame-prone methods (>= 100 appearances):");
    for (key, r) in prone.iter().take(8) {
        println!("  {:>5.2}  {key}  ({}/{} stacks)", r.ratio, r.blamed, r.appearances);
    }
    Ok(())
}
