//! Rank input features by learned weight: logistic-regression coefficients
//! and the sequence encoder's input-gate rows, normalized to max |w| = 1.
//!
//! ```sh
//! cargo run --release --example feature_importance
//! ```

use stackblame::corpus::{generate, GeneratorConfig};
use stackblame::eval::feature_importance;
use stackblame::model::{ModelBundle, ModelKind, DEFAULT_LAMBDA};
use stackblame::nn::TrainConfig;

fn top_and_bottom(rows: &[(String, f64)], n: usize) {
    for (name, value) in rows.iter().take(n) {
        println!("  {:>9.4}  {}", value, name);
    }
    println!("  {:>9}  ...", "");
    for (name, value) in rows.iter().rev().take(n).rev() {
        println!("  {:>9.4}  {}", value, name);
    }
}

fn main() -> stackblame::Result<()> {
    let corpus = generate(&GeneratorConfig::default().with_records(4000).with_seed(13))?;
    let (train, _) = corpus.temporal_split(0.9)?;
    let config = TrainConfig::desk_scale();

    let (logreg, _) = ModelBundle::train(ModelKind::LogReg, &train, &config, 0.0)?;
    let report = feature_importance(&logreg, false)?;
    println!("{}:", report.source);
    top_and_bottom(&report.rows, 8);

    // The engineered flags should land on sensible sides: blame frames are
    // app-owned code, never kernel entry points or empty frames.
    let engineered: Vec<&(String, f64)> =
        report.rows.iter().filter(|(n, _)| n.starts_with("is_") || n.starts_with("norm_")).collect();
    println!("\nengineered flags, best to worst:");
    for (name, value) in engineered {
        println!("  {:>9.4}  {}", value, name);
    }

    let (sequence, _) = ModelBundle::train(ModelKind::DeepAnalyze, &train, &config, DEFAULT_LAMBDA)?;
    let report = feature_importance(&sequence, false)?;
    println!("\n{}:", report.source);
    top_and_bottom(&report.rows, 8);
    Ok(())
}
