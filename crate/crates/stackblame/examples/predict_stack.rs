//! Run a trained localizer on individual stacks and inspect the attention
//! weights alongside the blamed frame.
//!
//! ```sh
//! cargo run --release --example predict_stack
//! ```

use stackblame::corpus::{generate, parse_frame, GeneratorConfig};
use stackblame::model::{ModelBundle, ModelKind, DEFAULT_LAMBDA};
use stackblame::nn::TrainConfig;

fn main() -> stackblame::Result<()> {
    let corpus = generate(&GeneratorConfig::default().with_records(3000).with_seed(29))?;
    let (train, _) = corpus.temporal_split(0.8)?;
    let (bundle, _) = ModelBundle::train(
        ModelKind::DeepAnalyze,
        &train,
        &TrainConfig::desk_scale(),
        DEFAULT_LAMBDA,
    )?;
    let model = bundle.as_sequence()?;

    // A display-driver crash: the faulting vendor frame sits beneath the
    // compositor's swap-chain call, exactly where a top-frame rule looks.
    let raw = [
        "igd10iumd64.dll!OpenAdapter10_2",
        "msedge.dll!gfx::[IDXGISwapChain4]::Present+0x2f",
        "msedge.dll!viz::DirectRenderer::DrawFrame",
        "msedge.dll!viz::Display::DrawAndSwap",
        "ntdll.dll!RtlUserThreadStart",
    ];
    let stack: Vec<_> = raw.iter().map(|s| parse_frame(s)).collect();

    let (index, alpha) = model.predict_blame(&stack, "msedge.exe")?;
    println!("blamed frame: [{}] {}", index, raw[index]);
    let (class, probs) = model.predict_problem_class(&stack, "msedge.exe")?;
    println!("problem class: {} (p = {:.3})\n", class, probs.iter().cloned().fold(0.0, f64::max));

    println!("attention over the stack:");
    for (i, (frame, a)) in raw.iter().zip(&alpha).enumerate() {
        let bar = "#".repeat((a * 40.0).round() as usize);
        let mark = if i == index { " <- blamed" } else { "" };
        println!("  {:.4} {:<52} {}{}", a, frame, bar, mark);
    }

    let total: f64 = alpha.iter().sum();
    println!("\nattention mass sums to {:.6}", total);
    Ok(())
}
