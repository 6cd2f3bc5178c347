//! End-to-end tests of the `stackblame` binary: every subcommand is spawned
//! as a real process and judged on its exit code, stdout, and the files it
//! leaves behind. Model-quality claims live in the acceptance gate; here the
//! assertions are about plumbing — determinism, file layout, agreement with
//! the library API, and the 0/1/2 exit-code contract.

use std::fs;
use std::path::Path;
use std::process::Command;

use stackblame::corpus::load_corpus;
use stackblame::model::{load_model, ModelKind};

/// Runs the compiled binary with `args`, returning (exit code, stdout, stderr).
fn stackblame(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_stackblame"))
        .args(args)
        .output()
        .expect("failed to spawn the stackblame binary");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

/// Runs the binary and asserts success, returning stdout.
fn ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = stackblame(args);
    assert_eq!(code, 0, "command {args:?} failed\nstdout:\n{stdout}\nstderr:\n{stderr}");
    stdout
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("temp paths are valid UTF-8")
}

/// Generates a corpus file inside `dir` and returns its path as a String.
fn generate_corpus(dir: &Path, name: &str, records: usize, seed: u64, apps: Option<&str>) -> String {
    let out = dir.join(name);
    let records = records.to_string();
    let seed = seed.to_string();
    let mut args = vec![
        "generate",
        "--out",
        path_str(&out),
        "--records",
        &records,
        "--seed",
        &seed,
    ];
    if let Some(list) = apps {
        args.push("--apps");
        args.push(list);
    }
    ok(&args);
    path_str(&out).to_string()
}

#[test]
fn generate_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let first = generate_corpus(dir.path(), "a.jsonl", 600, 11, None);
    let second = generate_corpus(dir.path(), "b.jsonl", 600, 11, None);
    let other = generate_corpus(dir.path(), "c.jsonl", 600, 12, None);

    let first = fs::read(first).unwrap();
    let second = fs::read(second).unwrap();
    let other = fs::read(other).unwrap();
    assert_eq!(first, second, "same seed must write byte-identical corpora");
    assert_ne!(first, other, "different seeds must write different corpora");
}

#[test]
fn analyze_writes_reports_into_the_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(dir.path(), "corpus.jsonl", 800, 3, None);
    let reports = dir.path().join("reports");
    fs::create_dir(&reports).unwrap();

    let stdout = ok(&["analyze", "--corpus", &corpus, "--out", path_str(&reports)]);
    assert!(stdout.contains("records"), "summary missing from stdout:\n{stdout}");

    for name in [
        "depth_distribution.csv",
        "binaries_per_stack.csv",
        "blame_location.csv",
        "problem_classes.csv",
        "blame_ratio.csv",
    ] {
        let file = reports.join(name);
        let content = fs::read_to_string(&file)
            .unwrap_or_else(|e| panic!("missing report {name}: {e}"));
        assert!(content.lines().count() >= 2, "{name} has no data rows");
    }
}

#[test]
fn logreg_workflow_trains_evaluates_and_predicts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(dir.path(), "corpus.jsonl", 1800, 33, None);
    let model = dir.path().join("logreg.model");
    let reports = dir.path().join("reports");
    fs::create_dir(&reports).unwrap();

    let stdout = ok(&[
        "train",
        "--kind",
        "logreg",
        "--train",
        &corpus,
        "--out",
        path_str(&model),
        "--max-epochs",
        "6",
    ]);
    assert!(stdout.contains("trained logreg"), "unexpected train output:\n{stdout}");

    let stdout = ok(&[
        "eval",
        "--model",
        path_str(&model),
        "--test",
        &corpus,
        "--out",
        path_str(&reports),
        "--importances",
    ]);
    assert!(stdout.contains("accuracy"), "summary missing from stdout:\n{stdout}");
    for name in
        ["summary.txt", "per_class.csv", "offset_histogram.csv", "predictions.log", "feature_importance.csv"]
    {
        assert!(reports.join(name).is_file(), "eval did not write {name}");
    }

    // The CLI prediction must agree with the library on the same inputs.
    let record = &load_corpus(Path::new(&corpus)).unwrap().records[0];
    let stack: Vec<String> = record.stack.iter().map(|f| f.raw.clone()).collect();
    let stdout = ok(&[
        "predict",
        "--model",
        path_str(&model),
        "--stack",
        &stack.join(";"),
        "--app",
        &record.app,
    ]);
    let bundle = load_model(&model).unwrap();
    let (expected, _) = bundle.predict(&record.stack, &record.app).unwrap();
    assert!(
        stdout.contains(&format!("blame index: {expected}")),
        "CLI disagrees with library prediction {expected}:\n{stdout}"
    );
    assert!(stdout.contains("blamed frame:"), "missing blamed-frame line:\n{stdout}");
}

#[test]
fn sequence_model_workflow_evaluates_and_predicts() {
    let dir = tempfile::tempdir().unwrap();
    let train = generate_corpus(dir.path(), "train.jsonl", 4000, 41, None);
    let test = generate_corpus(dir.path(), "test.jsonl", 1200, 42, None);
    let model = dir.path().join("da.model");
    let reports = dir.path().join("reports");
    fs::create_dir(&reports).unwrap();

    ok(&[
        "train",
        "--kind",
        "deepanalyze",
        "--train",
        &train,
        "--out",
        path_str(&model),
        "--hidden",
        "48",
        "--max-epochs",
        "12",
    ]);

    // The model must clearly beat guesswork on a fresh corpus from the same
    // distribution; the tight accuracy bounds live in the acceptance gate.
    ok(&["eval", "--model", path_str(&model), "--test", &test, "--out", path_str(&reports)]);
    let summary = fs::read_to_string(reports.join("summary.txt")).unwrap();
    let accuracy: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("overall accuracy:"))
        .expect("summary reports overall accuracy")
        .trim()
        .parse()
        .unwrap();
    assert!(accuracy >= 0.80, "sequence model accuracy {accuracy} too low:\n{summary}");

    // Crashes inside a display driver blame the driver entry frame on top
    // rather than the app frames below it. Judge the claim over the batch of
    // such stacks in the held-out corpus so no single record decides.
    let bundle = load_model(&model).unwrap();
    let held_out = load_corpus(Path::new(&test)).unwrap();
    let driver_top: Vec<_> = held_out
        .records
        .iter()
        .filter(|r| r.blame_index == Some(0) && r.stack[0].binary.starts_with("igd"))
        .collect();
    assert!(driver_top.len() >= 10, "expected driver-top crashes in the corpus");
    let hits = driver_top
        .iter()
        .filter(|r| bundle.predict_record(r).unwrap().0 == 0)
        .count();
    assert!(
        hits * 10 >= driver_top.len() * 7,
        "driver entry frame blamed on only {hits}/{} driver-top stacks",
        driver_top.len()
    );

    // The CLI predict path must agree with the library on the same stack,
    // whether the frames arrive via --stack or --stack-file.
    let record = driver_top[0];
    let frames: Vec<String> = record.stack.iter().map(|f| f.raw.clone()).collect();
    let stdout = ok(&[
        "predict",
        "--model",
        path_str(&model),
        "--stack",
        &frames.join(";"),
        "--app",
        &record.app,
    ]);
    let (expected, _) = bundle.predict(&record.stack, &record.app).unwrap();
    assert!(
        stdout.contains(&format!("blame index: {expected}")),
        "CLI disagrees with library prediction {expected}:\n{stdout}"
    );

    let stack_file = dir.path().join("stack.txt");
    fs::write(&stack_file, frames.join("\n")).unwrap();
    let from_file = ok(&[
        "predict",
        "--model",
        path_str(&model),
        "--stack-file",
        path_str(&stack_file),
        "--app",
        &record.app,
    ]);
    assert_eq!(stdout, from_file, "flag and file input must predict identically");

    // Sequence models print one attention weight per frame; together they
    // must form a distribution.
    let weights: Vec<f64> = stdout
        .lines()
        .skip_while(|l| !l.starts_with("attention:"))
        .skip(1)
        .filter_map(|l| l.trim().split_whitespace().next()?.parse().ok())
        .collect();
    assert_eq!(weights.len(), record.stack.len(), "one attention weight per frame:\n{stdout}");
    let total: f64 = weights.iter().sum();
    assert!((total - 1.0).abs() < 1e-3, "attention weights sum to {total}");
}

#[test]
fn finetune_and_curve_operate_on_a_saved_global_model() {
    let dir = tempfile::tempdir().unwrap();
    let global = generate_corpus(dir.path(), "global.jsonl", 1600, 51, Some("aurora,ledger,quill"));
    let target = generate_corpus(dir.path(), "target.jsonl", 1000, 52, Some("postbox"));
    let model = dir.path().join("global.model");

    ok(&[
        "train",
        "--kind",
        "deepanalyze",
        "--train",
        &global,
        "--out",
        path_str(&model),
        "--hidden",
        "32",
        "--max-epochs",
        "4",
    ]);

    // K = 0 keeps the parameters untouched: the tuned model must predict
    // exactly like the source on every target record.
    let untouched = dir.path().join("untouched.model");
    ok(&[
        "finetune",
        "--model",
        path_str(&model),
        "--train",
        &target,
        "--k",
        "0",
        "--out",
        path_str(&untouched),
    ]);
    let source = load_model(&model).unwrap();
    let tuned = load_model(&untouched).unwrap();
    let sample = load_corpus(Path::new(&target)).unwrap();
    for record in sample.records.iter().take(50) {
        let (a, _) = source.predict_record(record).unwrap();
        let (b, _) = tuned.predict_record(record).unwrap();
        assert_eq!(a, b, "K = 0 fine-tuning changed a prediction");
    }

    // A real K adapts the parameters and keeps the model kind.
    let adapted = dir.path().join("adapted.model");
    let stdout = ok(&[
        "finetune",
        "--model",
        path_str(&model),
        "--train",
        &target,
        "--k",
        "300",
        "--out",
        path_str(&adapted),
        "--max-epochs",
        "3",
    ]);
    assert!(stdout.contains("fine-tuned on 300 records"), "unexpected output:\n{stdout}");
    assert_eq!(load_model(&adapted).unwrap().kind(), ModelKind::DeepAnalyze);

    // Asking for more records than the corpus holds is a data error.
    let (code, _, stderr) = stackblame(&[
        "finetune",
        "--model",
        path_str(&model),
        "--train",
        &target,
        "--k",
        "99999",
        "--out",
        path_str(&adapted),
    ]);
    assert_eq!(code, 2, "oversized K should be a data error: {stderr}");

    // The learning curve writes one row per requested K.
    let curve_dir = dir.path().join("curve");
    fs::create_dir(&curve_dir).unwrap();
    ok(&[
        "curve",
        "--model",
        path_str(&model),
        "--target",
        &target,
        "--ks",
        "0,150",
        "--out",
        path_str(&curve_dir),
        "--max-epochs",
        "3",
    ]);
    let csv = fs::read_to_string(curve_dir.join("learning_curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "K,finetune_acc,scratch_acc");
    assert_eq!(lines.len(), 3, "expected two data rows:\n{csv}");
    for (line, k) in lines[1..].iter().zip(["0", "150"]) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], k);
        for acc in &fields[1..] {
            let acc: f64 = acc.parse().unwrap();
            assert!((0.0..=1.0).contains(&acc), "accuracy out of range: {line}");
        }
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // 0: help and version.
    assert_eq!(stackblame(&["--help"]).0, 0);
    assert_eq!(stackblame(&["--version"]).0, 0);
    assert_eq!(stackblame(&["generate", "--help"]).0, 0);

    // 1: usage errors never reach the pipeline.
    assert_eq!(stackblame(&[]).0, 1, "no subcommand");
    assert_eq!(stackblame(&["frobnicate"]).0, 1, "unknown subcommand");
    assert_eq!(
        stackblame(&["generate", "--out", "x.jsonl", "--records", "many"]).0,
        1,
        "non-numeric flag value"
    );
    assert_eq!(
        stackblame(&["predict", "--model", "m", "--stack", "a!b", "--stack-file", "f"]).0,
        1,
        "conflicting stack sources"
    );
    assert_eq!(stackblame(&["predict", "--model", "m"]).0, 1, "no stack source");

    // 2: well-formed invocations that hit bad data.
    assert_eq!(stackblame(&["analyze", "--corpus", "/no/such/file.jsonl"]).0, 2);

    let garbage = dir.path().join("garbage.jsonl");
    fs::write(&garbage, "this is not json\n").unwrap();
    let model_out = dir.path().join("m.model");
    assert_eq!(
        stackblame(&["train", "--kind", "logreg", "--train", path_str(&garbage), "--out", path_str(&model_out)]).0,
        2,
        "corrupt corpus"
    );

    let corrupt_model = dir.path().join("corrupt.model");
    fs::write(&corrupt_model, b"not a model").unwrap();
    let corpus = generate_corpus(dir.path(), "tiny.jsonl", 120, 9, None);
    assert_eq!(
        stackblame(&["eval", "--model", path_str(&corrupt_model), "--test", &corpus, "--out", path_str(dir.path())]).0,
        2,
        "corrupt model"
    );

    // Curve needs a sequence model; a heuristic bundle is a data error.
    let top_model = dir.path().join("top.model");
    ok(&["train", "--kind", "top", "--train", &corpus, "--out", path_str(&top_model)]);
    assert_eq!(
        stackblame(&["curve", "--model", path_str(&top_model), "--target", &corpus, "--out", path_str(dir.path())]).0,
        2,
        "curve on a non-sequence model"
    );
}
