//! Adapt a global localizer to an unseen application: fine-tune the global
//! weights on K target records and compare against training from scratch on
//! the same K records, sweeping K.
//!
//! ```sh
//! cargo run --release --example transfer_learning
//! ```

use stackblame::corpus::{generate, GeneratorConfig};
use stackblame::eval::{curve_csv, learning_curve};
use stackblame::model::{ModelBundle, ModelKind, DEFAULT_LAMBDA};
use stackblame::nn::TrainConfig;

fn main() -> stackblame::Result<()> {
    // The global model never sees `postbox`: it trains on the other three
    // apps and meets the target's binaries and namespaces only at K > 0.
    let source = generate(
        &GeneratorConfig::default()
            .with_apps(&["aurora", "ledger", "quill"])
            .with_records(4000)
            .with_seed(3),
    )?;
    let target =
        generate(&GeneratorConfig::default().with_apps(&["postbox"]).with_records(1500).with_seed(4))?;

    let config = TrainConfig::desk_scale();
    println!("training the global model on {} source records...", source.len());
    let (global, _) = ModelBundle::train(ModelKind::DeepAnalyze, &source, &config, DEFAULT_LAMBDA)?;

    let ks = [0, 50, 200, 800];
    println!("sweeping K over {:?} on {} target records\n", ks, target.len());
    let points = learning_curve(&global, &target, &ks, &config)?;

    print!("{}", curve_csv(&points));
    println!();
    for p in &points {
        if p.k == 0 {
            println!(
                "K=0: zero-shot global {:.4} vs top-frame rule {:.4}",
                p.finetune_acc, p.scratch_acc
            );
        } else {
            let edge = (p.finetune_acc - p.scratch_acc) * 100.0;
            println!("K={}: fine-tuning leads scratch by {:+.1} points", p.k, edge);
        }
    }
    Ok(())
}
