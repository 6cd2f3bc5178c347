//! Train the sequence labeler end to end at desk scale and watch the
//! training trace: per-epoch loss, validation accuracy, and early stopping.
//!
//! ```sh
//! cargo run --release --example train_localizer
//! ```

use stackblame::corpus::{generate, GeneratorConfig};
use stackblame::eval::evaluate;
use stackblame::model::{ModelBundle, ModelKind, DEFAULT_LAMBDA};
use stackblame::nn::TrainConfig;

fn main() -> stackblame::Result<()> {
    let corpus = generate(&GeneratorConfig::default().with_records(3000).with_seed(23))?;
    let (train, test) = corpus.temporal_split(0.8)?;

    let config = TrainConfig::desk_scale();
    println!(
        "training {} records, hidden {}, up to {} epochs (patience {})\n",
        train.len(),
        config.hidden,
        config.max_epochs,
        config.patience
    );

    let (bundle, trace) =
        ModelBundle::train(ModelKind::BiLstmCrfAttn, &train, &config, DEFAULT_LAMBDA)?;
    let trace = trace.expect("sequence training reports a trace");
    for (i, epoch) in trace.epochs.iter().enumerate() {
        println!(
            "epoch {:>2}  blame loss {:>8.4}  class loss {:>7.4}  valid accuracy {:.4}",
            i + 1,
            epoch.blame_loss,
            epoch.class_loss,
            epoch.valid_accuracy
        );
    }
    println!("kept epoch {}\n", trace.best_epoch + 1);

    let report = evaluate(&bundle, &test)?;
    println!("test accuracy {:.4} on {} records", report.overall, test.len());
    for row in &report.per_class {
        println!("  {:<24} {:.4}  ({} records)", row.class, row.accuracy, row.records);
    }

    // Where do the misses land? Offsets are predicted minus true index, so
    // negative means the model blamed a frame closer to the top of the stack.
    println!("\noffset histogram (predicted - true):");
    for (offset, count) in &report.offsets {
        if *offset != 0 {
            println!("  {:>+3}: {}", offset, count);
        }
    }
    Ok(())
}
