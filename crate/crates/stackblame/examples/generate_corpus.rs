//! Generate a synthetic labeled crash corpus, save it, and reload it.
//!
//! Every record is produced from `(config, seed, record index)` alone, so
//! the same invocation always yields byte-identical files — handy for
//! fixtures and regression baselines.
//!
//! ```sh
//! cargo run --example generate_corpus
//! ```

use stackblame::corpus::{generate, load_corpus, rule_blame, save_corpus, GeneratorConfig};

fn main() -> stackblame::Result<()> {
    let config = GeneratorConfig::default().with_records(2000).with_seed(41);
    let corpus = generate(&config)?;

    println!("generated {} records across apps:", corpus.len());
    for app in &config.apps {
        let n = corpus.records.iter().filter(|r| r.app == app.name).count();
        println!("  {:<10} {n}", app.name);
    }

    // Show one record in full: the stack, the planted blame, and the class.
    let record = &corpus.records[7];
    println!("\nsample record (app {}, class {}):", record.app, record.problem_class);
    for (i, frame) in record.stack.iter().enumerate() {
        let marker = if Some(i) == record.blame_index { "  <- blamed" } else { "" };
        println!("  [{i:>2}] {}{marker}", frame.raw);
    }

    // The generator's labels agree with its own blame rule, re-derived from
    // the finished stack.
    let agree = corpus
        .records
        .iter()
        .filter(|r| rule_blame(&config, r) == r.blame_index)
        .count();
    println!("\nrule self-consistency: {agree}/{} records", corpus.len());

    // Save, reload, compare.
    let dir = std::env::temp_dir().join("stackblame_example");
    let path = dir.join("corpus.jsonl");
    save_corpus(&corpus, &path)?;
    let reloaded = load_corpus(&path)?;
    assert_eq!(corpus, reloaded);
    println!("saved and reloaded {} records from {}", reloaded.len(), path.display());

    // Temporal split: train on the earliest 80%, evaluate on the rest.
    let (train, test) = corpus.temporal_split(0.8)?;
    println!("temporal split: {} train / {} test", train.len(), test.len());
    Ok(())
}
