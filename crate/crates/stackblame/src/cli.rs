//! Command-line front end: generate, analyze, train, eval, predict,
//! finetune, and curve subcommands over the library pipeline.
//!
//! The binary stays thin — every subcommand parses flags, loads inputs,
//! calls one library entry point, and writes results atomically. Exit codes:
//! 0 success, 1 usage error (unknown flags, missing arguments), 2 data error
//! (unreadable files, corrupt models, failed preconditions).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    generate, load_corpus, parse_frame, save_corpus, write_atomic, Corpus, Frame, GeneratorConfig,
};
use crate::error::Result;
use crate::eval::{curve_csv, evaluate, feature_importance, learning_curve, DEFAULT_CURVE_KS};
use crate::model::{load_model, save_model, ModelBundle, ModelKind, DEFAULT_LAMBDA};
use crate::nn::TrainConfig;
use crate::stats::{blame_ratio, corpus_stats};

/// Environment variable naming the default output directory for report
/// subcommands when `--out` is not given.
pub const OUT_DIR_ENV: &str = "STACKBLAME_OUT";

#[derive(Parser)]
#[command(
    name = "stackblame",
    version,
    about = "Locate the blamed frame in crash stacks",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled crash corpus.
    Generate {
        /// JSON generator config; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Corpus file to write (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Override the configured record count.
        #[arg(long)]
        records: Option<usize>,
        /// Override the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Restrict the app catalog, e.g. "aurora,ledger".
        #[arg(long)]
        apps: Option<String>,
    },
    /// Compute corpus statistics and write them as CSV files.
    Analyze {
        /// Corpus file to analyze.
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory (default: $STACKBLAME_OUT, then ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model and save it as a bundle.
    Train {
        /// Model kind: top, second, most_freq, logreg, bilstm_crf_attn,
        /// or deepanalyze.
        #[arg(long)]
        kind: String,
        /// Training corpus file.
        #[arg(long)]
        train: PathBuf,
        /// Model bundle file to write.
        #[arg(long)]
        out: PathBuf,
        /// Problem-class loss weight for deepanalyze.
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Evaluate a saved model on a labeled corpus and write a report.
    Eval {
        /// Model bundle file.
        #[arg(long)]
        model: PathBuf,
        /// Labeled test corpus file.
        #[arg(long)]
        test: PathBuf,
        /// Output directory (default: $STACKBLAME_OUT, then ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write feature importances (logreg and sequence models).
        #[arg(long)]
        importances: bool,
    },
    /// Predict the blamed frame of one stack.
    Predict {
        /// Model bundle file.
        #[arg(long)]
        model: PathBuf,
        /// Stack as ";"-separated frames, top first.
        #[arg(long, conflicts_with = "stack_file", required_unless_present = "stack_file")]
        stack: Option<String>,
        /// File with one frame per line, top first.
        #[arg(long)]
        stack_file: Option<PathBuf>,
        /// Application name the stack came from.
        #[arg(long, default_value = "")]
        app: String,
    },
    /// Fine-tune a saved sequence model on a target corpus.
    Finetune {
        /// Source model bundle file.
        #[arg(long)]
        model: PathBuf,
        /// Target-app training corpus file.
        #[arg(long)]
        train: PathBuf,
        /// Use only the first K records (0 keeps the model unchanged;
        /// default: all).
        #[arg(long)]
        k: Option<usize>,
        /// Fine-tuned bundle file to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Fine-tune vs from-scratch learning curve on a target corpus.
    Curve {
        /// Global sequence model bundle file.
        #[arg(long)]
        model: PathBuf,
        /// Target-app corpus file (temporally split 80/20 inside).
        #[arg(long)]
        target: PathBuf,
        /// Comma-separated sample counts, e.g. "0,100,500".
        #[arg(long)]
        ks: Option<String>,
        /// Output directory (default: $STACKBLAME_OUT, then ".").
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
}

/// Optional overrides of the default training configuration.
#[derive(Args)]
struct TrainOverrides {
    /// Master random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden units per LSTM direction.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Epochs without improvement before early stopping.
    #[arg(long)]
    patience: Option<usize>,
    /// Dropout rate on encoder states.
    #[arg(long)]
    dropout: Option<f64>,
    /// Fraction of training data held out for early stopping.
    #[arg(long)]
    validation_fraction: Option<f64>,
}

impl TrainOverrides {
    fn apply(&self, base: TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            patience: self.patience.unwrap_or(base.patience),
            dropout: self.dropout.unwrap_or(base.dropout),
            hidden: self.hidden.unwrap_or(base.hidden),
            seed: self.seed.unwrap_or(base.seed),
            validation_fraction: self.validation_fraction.unwrap_or(base.validation_fraction),
        }
    }
}

/// Parses and runs one invocation, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out, records, seed, apps } => {
            let mut cfg = match config {
                Some(path) => read_generator_config(&path)?,
                None => GeneratorConfig::default(),
            };
            if let Some(n) = records {
                cfg.record_count = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(list) = apps {
                let names: Vec<&str> = list.split(',').map(str::trim).collect();
                cfg = cfg.with_apps(&names);
            }
            let corpus = generate(&cfg)?;
            save_corpus(&corpus, &out)?;
            println!("wrote {} records to {}", corpus.len(), out.display());
            Ok(())
        }
        Command::Analyze { corpus, out } => {
            let corpus = load_corpus(&corpus)?;
            let stats = corpus_stats(&corpus)?;
            let ratios = blame_ratio(&corpus);
            let dir = output_dir(out);
            for (name, content) in stats.to_csv_files(&ratios) {
                write_named(&dir, name, &content)?;
            }
            print!("{}", stats.summary());
            println!("reports written to {}", dir.display());
            Ok(())
        }
        Command::Train { kind, train, out, lambda, overrides } => {
            let kind = ModelKind::parse(&kind)?;
            let corpus = load_corpus(&train)?;
            let config = overrides.apply(TrainConfig::default());
            let (bundle, trace) = ModelBundle::train(kind, &corpus, &config, lambda)?;
            save_model(&bundle, &out)?;
            match trace {
                Some(t) => println!(
                    "trained {kind} for {} epochs (best epoch {}); saved to {}",
                    t.epochs.len(),
                    t.best_epoch + 1,
                    out.display()
                ),
                None => println!("trained {kind}; saved to {}", out.display()),
            }
            Ok(())
        }
        Command::Eval { model, test, out, importances } => {
            let bundle = load_model(&model)?;
            let corpus = load_corpus(&test)?;
            let report = evaluate(&bundle, &corpus)?;
            let dir = output_dir(out);
            for (name, content) in report.to_files() {
                write_named(&dir, name, &content)?;
            }
            if importances {
                let imp = feature_importance(&bundle, false)?;
                write_named(&dir, "feature_importance.csv", &imp.to_csv())?;
            }
            print!("{}", report.summary());
            println!("reports written to {}", dir.display());
            Ok(())
        }
        Command::Predict { model, stack, stack_file, app } => {
            let bundle = load_model(&model)?;
            let frames = read_stack(stack.as_deref(), stack_file.as_deref())?;
            let (index, alpha) = bundle.predict(&frames, &app)?;
            println!("blame index: {index}");
            println!("blamed frame: {}", frames[index].raw);
            if let Some(alpha) = alpha {
                println!("attention:");
                for (frame, a) in frames.iter().zip(&alpha) {
                    println!("  {a:.4}  {}", frame.raw);
                }
            }
            Ok(())
        }
        Command::Finetune { model, train, k, out, overrides } => {
            let bundle = load_model(&model)?;
            let source = bundle.as_sequence()?;
            let corpus = load_corpus(&train)?;
            let k = k.unwrap_or(corpus.len());
            if k > corpus.len() {
                return Err(crate::error::invalid(format!(
                    "K = {k} exceeds the {} target records",
                    corpus.len()
                )));
            }
            let subset = Corpus::new(corpus.records[..k].to_vec());
            let config = overrides.apply(source.config.clone());
            let (tuned, trace) = crate::eval::fine_tune_on(source, &subset, &config)?;
            let tuned_bundle = ModelBundle {
                train_digest: crate::model::corpus_digest(&subset),
                payload: crate::model::Payload::Sequence(tuned),
            };
            save_model(&tuned_bundle, &out)?;
            println!(
                "fine-tuned on {k} records for {} epochs; saved to {}",
                trace.epochs.len(),
                out.display()
            );
            Ok(())
        }
        Command::Curve { model, target, ks, out, overrides } => {
            let bundle = load_model(&model)?;
            let corpus = load_corpus(&target)?;
            let ks = match ks {
                Some(text) => parse_ks(&text)?,
                None => DEFAULT_CURVE_KS.to_vec(),
            };
            let config = overrides.apply(bundle.as_sequence()?.config.clone());
            let points = learning_curve(&bundle, &corpus, &ks, &config)?;
            let csv = curve_csv(&points);
            let dir = output_dir(out);
            write_named(&dir, "learning_curve.csv", &csv)?;
            print!("{csv}");
            println!("curve written to {}", dir.display());
            Ok(())
        }
    }
}

fn read_generator_config(path: &Path) -> Result<GeneratorConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| crate::error::config(format!("{}: {e}", path.display())))
}

fn output_dir(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_named(dir: &Path, name: &str, content: &str) -> Result<()> {
    write_atomic(&dir.join(name), content.as_bytes())
}

fn read_stack(stack: Option<&str>, stack_file: Option<&Path>) -> Result<Vec<Frame>> {
    let texts: Vec<String> = match (stack, stack_file) {
        (Some(s), None) => s.split(';').map(|f| f.trim().to_string()).collect(),
        (None, Some(path)) => std::fs::read_to_string(path)?
            .lines()
            .map(|l| l.trim().to_string())
            .collect(),
        // clap enforces exactly one of the two flags.
        _ => unreachable!("flag arity enforced by the parser"),
    };
    let frames: Vec<Frame> =
        texts.iter().filter(|t| !t.is_empty()).map(|t| parse_frame(t)).collect();
    if frames.is_empty() {
        return Err(crate::error::invalid("the stack has no frames"));
    }
    Ok(frames)
}

fn parse_ks(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| crate::error::invalid(format!("bad K value {part:?}")))
        })
        .collect()
}
