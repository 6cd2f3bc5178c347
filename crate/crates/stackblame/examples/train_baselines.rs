//! Fit and compare the non-neural baselines: the position heuristics, the
//! blame-frequency table, and per-frame logistic regression.
//!
//! ```sh
//! cargo run --release --example train_baselines
//! ```

use stackblame::corpus::{generate, GeneratorConfig};
use stackblame::eval::{evaluate, improvement_pct};
use stackblame::model::{ModelBundle, ModelKind};
use stackblame::nn::TrainConfig;

fn main() -> stackblame::Result<()> {
    let corpus = generate(&GeneratorConfig::default().with_records(6000).with_seed(11))?;
    let (train, test) = corpus.temporal_split(0.8)?;
    println!("{} train / {} test records\n", train.len(), test.len());

    let config = TrainConfig::desk_scale();
    let kinds = [
        ModelKind::TopFrame,
        ModelKind::SecondFrame,
        ModelKind::MostFreqTopFrame,
        ModelKind::LogReg,
    ];

    let mut results = Vec::new();
    for kind in kinds {
        let (bundle, _) = ModelBundle::train(kind, &train, &config, 0.0)?;
        let report = evaluate(&bundle, &test)?;
        println!("{:<12} accuracy {:.4}", kind.tag(), report.overall);
        results.push((kind, report));
    }

    // Per-class view: the frequency table degrades where its keys are
    // unseen, logistic regression where position alone is misleading.
    println!("\nper-class accuracy:");
    print!("{:<24}", "class");
    for kind in kinds {
        print!("{:>12}", kind.tag());
    }
    println!();
    for row in 0..results[0].1.per_class.len() {
        print!("{:<24}", results[0].1.per_class[row].class);
        for (_, report) in &results {
            print!("{:>12.4}", report.per_class[row].accuracy);
        }
        println!();
    }

    let top = results[0].1.overall;
    let logreg = results[3].1.overall;
    println!(
        "\nlogreg vs top-frame: {:.1}% relative difference",
        improvement_pct(logreg, top)?
    );
    Ok(())
}
