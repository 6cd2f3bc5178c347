//! Accuracy and diagnostic reporting: overall and per-problem-class accuracy,
//! pairwise improvement percentages, first-layer feature importances, and
//! transfer learning curves.
//!
//! Every report embeds enough provenance (corpus digests, a per-record
//! prediction log and its digest) that the headline number can be recomputed
//! from the artifacts alone.

use std::collections::BTreeMap;

use crate::corpus::{fnv1a, Corpus};
use crate::error::{invalid, Result};
use crate::model::{
    corpus_digest, ModelBundle, ModelKind, Payload, SequenceModel, TrainingTrace,
};
use crate::nn::lstm::LstmParams;
use crate::nn::TrainConfig;

/// Sample counts evaluated by default on transfer learning curves.
pub const DEFAULT_CURVE_KS: [usize; 6] = [0, 100, 500, 1000, 2000, 5000];

/// Fraction of the target corpus held out as the fixed curve test split.
const CURVE_TRAIN_FRACTION: f64 = 0.8;

/// Fraction of correct predictions. Errors on empty or mismatched inputs.
pub fn accuracy(predictions: &[usize], truths: &[usize]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(invalid(format!(
            "{} predictions against {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(invalid("accuracy of zero records"));
    }
    let correct = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// One row of the per-problem-class accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAccuracy {
    pub class: String,
    pub records: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Accuracy grouped by problem class, rows ordered by class name. Classes
/// with zero records cannot appear because grouping follows the data.
pub fn per_class_accuracy(
    predictions: &[usize],
    truths: &[usize],
    classes: &[String],
) -> Result<Vec<ClassAccuracy>> {
    if predictions.len() != truths.len() || predictions.len() != classes.len() {
        return Err(invalid(format!(
            "per-class accuracy needs aligned inputs, got {}/{}/{}",
            predictions.len(),
            truths.len(),
            classes.len()
        )));
    }
    if predictions.is_empty() {
        return Err(invalid("per-class accuracy of zero records"));
    }
    let mut groups: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for ((p, t), class) in predictions.iter().zip(truths).zip(classes) {
        let entry = groups.entry(class).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += usize::from(p == t);
    }
    Ok(groups
        .into_iter()
        .map(|(class, (records, correct))| ClassAccuracy {
            class: class.to_string(),
            records,
            correct,
            accuracy: correct as f64 / records as f64,
        })
        .collect())
}

/// Percentage difference between two accuracies relative to their average:
/// `|a1 − a2| / avg(a1, a2) × 100`. Symmetric; zero iff the inputs are equal.
pub fn improvement_pct(a1: f64, a2: f64) -> Result<f64> {
    for a in [a1, a2] {
        if !(a > 0.0 && a <= 1.0) {
            return Err(invalid(format!("accuracies must lie in (0, 1], got {a}")));
        }
    }
    Ok((a1 - a2).abs() / ((a1 + a2) / 2.0) * 100.0)
}

/// One evaluated record: the dedup hash, the label, the prediction, and the
/// per-frame attention weights (empty for models without attention).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub record_hash: u64,
    pub true_index: usize,
    pub predicted_index: usize,
    pub alpha: Vec<f64>,
}

impl PredictionRecord {
    /// One log line: `hash,true,predicted,α;α;…`.
    fn to_line(&self) -> String {
        let alpha: Vec<String> = self.alpha.iter().map(|a| format!("{a:.6}")).collect();
        format!(
            "{:016x},{},{},{}",
            self.record_hash,
            self.true_index,
            self.predicted_index,
            alpha.join(";")
        )
    }
}

/// Everything one evaluation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub kind: ModelKind,
    pub overall: f64,
    pub per_class: Vec<ClassAccuracy>,
    /// (predicted − true index) → record count.
    pub offsets: BTreeMap<i64, usize>,
    /// Config echo for learned models.
    pub config: Option<TrainConfig>,
    /// Digest of the corpus the model was trained on.
    pub train_digest: u64,
    /// Digest of the corpus evaluated here.
    pub test_digest: u64,
    pub predictions: Vec<PredictionRecord>,
    /// FNV-1a digest of the rendered prediction log.
    pub log_digest: u64,
}

/// Runs `bundle` over every record of a labeled test corpus.
pub fn evaluate(bundle: &ModelBundle, test: &Corpus) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(invalid("cannot evaluate on an empty corpus"));
    }
    let mut predictions = Vec::with_capacity(test.len());
    let mut predicted = Vec::with_capacity(test.len());
    let mut truths = Vec::with_capacity(test.len());
    let mut classes = Vec::with_capacity(test.len());
    let mut offsets = BTreeMap::new();
    for record in &test.records {
        let true_index = record
            .blame_index
            .ok_or_else(|| invalid("every test record needs a blame label"))?;
        let (predicted_index, alpha) = bundle.predict_record(record)?;
        *offsets.entry(predicted_index as i64 - true_index as i64).or_insert(0) += 1;
        predictions.push(PredictionRecord {
            record_hash: record.dedup_hash,
            true_index,
            predicted_index,
            alpha: alpha.unwrap_or_default(),
        });
        predicted.push(predicted_index);
        truths.push(true_index);
        classes.push(record.problem_class.clone());
    }
    let overall = accuracy(&predicted, &truths)?;
    let per_class = per_class_accuracy(&predicted, &truths, &classes)?;
    let log_digest = fnv1a(render_log(&predictions).as_bytes());
    Ok(EvalReport {
        kind: bundle.kind(),
        overall,
        per_class,
        offsets,
        config: bundle.config().cloned(),
        train_digest: bundle.train_digest,
        test_digest: corpus_digest(test),
        predictions,
        log_digest,
    })
}

fn render_log(predictions: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&p.to_line());
        out.push('\n');
    }
    out
}

/// Recomputes overall accuracy from a rendered prediction log, so reports
/// can be audited without the model.
pub fn accuracy_from_log(log: &str) -> Result<f64> {
    let mut predicted = Vec::new();
    let mut truths = Vec::new();
    for (idx, line) in log.lines().enumerate() {
        let mut fields = line.split(',');
        let (_hash, t, p) = (fields.next(), fields.next(), fields.next());
        let parse = |v: Option<&str>| {
            v.and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| invalid(format!("malformed prediction log line {}", idx + 1)))
        };
        truths.push(parse(t)?);
        predicted.push(parse(p)?);
    }
    accuracy(&predicted, &truths)
}

impl EvalReport {
    /// The per-record log, one line per prediction.
    pub fn prediction_log(&self) -> String {
        render_log(&self.predictions)
    }

    /// Human-readable run summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("model kind:      {}\n", self.kind));
        s.push_str(&format!("test records:    {}\n", self.predictions.len()));
        s.push_str(&format!("overall accuracy: {:.4}\n", self.overall));
        s.push_str(&format!("train corpus:    {:016x}\n", self.train_digest));
        s.push_str(&format!("test corpus:     {:016x}\n", self.test_digest));
        s.push_str(&format!("prediction log:  {:016x}\n", self.log_digest));
        if let Some(c) = &self.config {
            s.push_str(&format!(
                "config:          lr {} batch {} epochs {} patience {} dropout {} hidden {} seed {}\n",
                c.learning_rate, c.batch_size, c.max_epochs, c.patience, c.dropout, c.hidden,
                c.seed
            ));
        }
        s.push_str("\nper-class accuracy:\n");
        for row in &self.per_class {
            s.push_str(&format!(
                "  {:<24} {:>6} records  {:.4}\n",
                row.class, row.records, row.accuracy
            ));
        }
        s.push_str("\nblame offset (predicted - true):\n");
        for (offset, count) in &self.offsets {
            s.push_str(&format!("  {offset:>4}: {count}\n"));
        }
        s
    }

    /// Report artifacts as (file name, content) pairs.
    pub fn to_files(&self) -> Vec<(&'static str, String)> {
        let mut per_class = String::from("class,records,correct,accuracy\n");
        for row in &self.per_class {
            per_class.push_str(&format!(
                "{},{},{},{:.6}\n",
                row.class, row.records, row.correct, row.accuracy
            ));
        }
        let mut offsets = String::from("offset,count\n");
        for (offset, count) in &self.offsets {
            offsets.push_str(&format!("{offset},{count}\n"));
        }
        vec![
            ("summary.txt", self.summary()),
            ("per_class.csv", per_class),
            ("offset_histogram.csv", offsets),
            ("predictions.log", self.prediction_log()),
        ]
    }
}

/// Signed first-layer feature importances, max-abs normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportanceReport {
    /// Which weights were inspected, stated in the rendered header.
    pub source: String,
    /// (feature name, importance), descending by importance.
    pub rows: Vec<(String, f64)>,
}

impl FeatureImportanceReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# source: {}\n# normalization: max absolute importance = 1\nfeature,importance\n",
            self.source
        );
        for (name, value) in &self.rows {
            out.push_str(&format!("{name},{value:.6}\n"));
        }
        out
    }
}

/// Extracts first-layer feature importances from a fitted model. Logistic
/// regression reports its coefficients; sequence models report, per input
/// feature, the summed candidate-gate input weights of both BiLSTM
/// directions (`all_gates` widens that to all four gates). Values are
/// normalized so the largest magnitude is 1, then ranked by signed value.
pub fn feature_importance(bundle: &ModelBundle, all_gates: bool) -> Result<FeatureImportanceReport> {
    let (names, mut values, source) = match &bundle.payload {
        Payload::LogReg(m) => (
            m.vocab.feature_names(),
            m.w.data().to_vec(),
            "logistic regression coefficients".to_string(),
        ),
        Payload::Sequence(m) => {
            let names = m.vocab.feature_names();
            let dim = m.params.input_dim();
            let mut values = vec![0.0; dim];
            for direction in [&m.params.bilstm.fwd, &m.params.bilstm.bwd] {
                accumulate_input_rows(direction, all_gates, &mut values);
            }
            let gates = if all_gates { "all-gate" } else { "candidate-gate" };
            (names, values, format!("summed BiLSTM {gates} input weights"))
        }
        _ => {
            return Err(invalid(format!(
                "model kind '{}' has no feature weights to report",
                bundle.kind()
            )))
        }
    };
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs > 0.0 {
        for v in &mut values {
            *v /= max_abs;
        }
    }
    let mut rows: Vec<(String, f64)> = names.into_iter().zip(values).collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    Ok(FeatureImportanceReport { source, rows })
}

/// Adds each input feature's summed gate weights (weights are input-major,
/// so feature j is row j).
fn accumulate_input_rows(p: &LstmParams, all_gates: bool, values: &mut [f64]) {
    let mut gates: Vec<&crate::nn::Tensor> = vec![&p.w_g];
    if all_gates {
        gates.extend([&p.w_i, &p.w_f, &p.w_o]);
    }
    for w in gates {
        for (j, total) in values.iter_mut().enumerate() {
            *total += w.row(j).iter().sum::<f64>();
        }
    }
}

/// One transfer-curve sample: both arms trained on the identical first-`k`
/// target records and scored on the fixed target test split.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    pub finetune_acc: f64,
    pub scratch_acc: f64,
}

/// Renders curve points as CSV with a `K,finetune_acc,scratch_acc` header.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("K,finetune_acc,scratch_acc\n");
    for p in points {
        out.push_str(&format!("{},{:.6},{:.6}\n", p.k, p.finetune_acc, p.scratch_acc));
    }
    out
}

/// Fine-tuning versus training from scratch on a held-out application.
///
/// The target corpus is split temporally (first 80% available for
/// adaptation, last 20% the fixed test set). For each K both arms see the
/// identical first-K adaptation records: one arm fine-tunes the global
/// sequence model, the other trains the same architecture from scratch.
/// K = 0 reports pure domain transfer against the untrained TopFrame
/// baseline. Arms run sequentially, so results are deterministic.
pub fn learning_curve(
    global: &ModelBundle,
    target: &Corpus,
    ks: &[usize],
    config: &TrainConfig,
) -> Result<Vec<CurvePoint>> {
    let source = global.as_sequence()?;
    config.validate()?;
    if ks.is_empty() {
        return Err(invalid("learning curve needs at least one K"));
    }
    let (adapt, test) = target.temporal_split(CURVE_TRAIN_FRACTION)?;
    if let Some(&too_big) = ks.iter().find(|k| **k > adapt.len()) {
        return Err(invalid(format!(
            "K = {too_big} exceeds the {} target records available for adaptation",
            adapt.len()
        )));
    }

    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let subset = Corpus::new(adapt.records[..k].to_vec());
        let (finetune_acc, scratch_acc) = if k == 0 {
            let transfer = evaluate(global, &test)?.overall;
            let baseline = ModelBundle { train_digest: 0, payload: Payload::TopFrame };
            (transfer, evaluate(&baseline, &test)?.overall)
        } else {
            let (tuned, _) = fine_tune_on(source, &subset, config)?;
            let tuned_bundle = ModelBundle {
                train_digest: corpus_digest(&subset),
                payload: Payload::Sequence(tuned),
            };
            let (scratch, _) =
                ModelBundle::train(source.kind, &subset, config, source.lambda)?;
            (evaluate(&tuned_bundle, &test)?.overall, evaluate(&scratch, &test)?.overall)
        };
        points.push(CurvePoint { k, finetune_acc, scratch_acc });
    }
    Ok(points)
}

/// Fine-tunes `source` on a target subset, holding out its temporal tail for
/// early stopping — the same split rule scratch training applies internally.
pub fn fine_tune_on(
    source: &SequenceModel,
    subset: &Corpus,
    config: &TrainConfig,
) -> Result<(SequenceModel, TrainingTrace)> {
    if subset.is_empty() {
        return source.fine_tune(subset, subset, config);
    }
    let (train, valid) = subset.temporal_split(1.0 - config.validation_fraction)?;
    source.fine_tune(&train, &valid, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_frame, CrashRecord};
    use crate::featurize::{FeaturizerVocab, TfIdfVocab};
    use crate::model::LogRegModel;
    use crate::nn::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accuracy_counts_exact_matches() {
        assert_eq!(accuracy(&[0, 1, 2, 3], &[0, 9, 2, 9]).unwrap(), 0.5);
        assert_eq!(accuracy(&[4, 4], &[4, 4]).unwrap(), 1.0);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_matches_hand_count_on_twenty_records() {
        // Hand enumeration: predictions disagree at indices 2, 5, 11, 17,
        // 18 - five misses, fifteen hits.
        let truths: Vec<usize> = (0..20).map(|i| i % 4).collect();
        let mut predictions = truths.clone();
        for i in [2, 5, 11, 17, 18] {
            predictions[i] += 1;
        }
        assert_eq!(accuracy(&predictions, &truths).unwrap(), 15.0 / 20.0);
    }

    #[test]
    fn per_class_rows_group_and_weight_back_to_overall() {
        let single = per_class_accuracy(&[0, 1], &[0, 2], &["A".into(), "A".into()]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].accuracy, 0.5);

        let two = per_class_accuracy(
            &[0, 0, 5, 5],
            &[0, 0, 1, 2],
            &["GOOD".into(), "GOOD".into(), "BAD".into(), "BAD".into()],
        )
        .unwrap();
        assert_eq!(two[0].class, "BAD");
        assert_eq!(two[0].accuracy, 0.0);
        assert_eq!(two[1].class, "GOOD");
        assert_eq!(two[1].accuracy, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 500;
        let truths: Vec<usize> = (0..n).map(|_| rng.random_range(0..6)).collect();
        let predictions: Vec<usize> = (0..n).map(|_| rng.random_range(0..6)).collect();
        let classes: Vec<String> =
            (0..n).map(|_| format!("C{}", rng.random_range(0..5))).collect();
        let rows = per_class_accuracy(&predictions, &truths, &classes).unwrap();
        assert_eq!(rows.iter().map(|r| r.records).sum::<usize>(), n);
        let weighted: f64 =
            rows.iter().map(|r| r.accuracy * r.records as f64).sum::<f64>() / n as f64;
        let overall = accuracy(&predictions, &truths).unwrap();
        assert!((weighted - overall).abs() < 1e-12);
    }

    #[test]
    fn improvement_pct_is_symmetric_relative_difference() {
        let p = improvement_pct(0.90, 0.77).unwrap();
        assert!((p - 15.5688622754491).abs() < 1e-10, "got {p}");
        assert_eq!(improvement_pct(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(
            improvement_pct(0.3, 0.9).unwrap(),
            improvement_pct(0.9, 0.3).unwrap()
        );
        assert!(improvement_pct(0.0, 0.5).is_err());
        assert!(improvement_pct(0.5, 1.2).is_err());
    }

    fn empty_vocab() -> FeaturizerVocab {
        FeaturizerVocab {
            namespace: TfIdfVocab::new(vec![], vec![]),
            method: TfIdfVocab::new(vec![], vec![]),
        }
    }

    #[test]
    fn logreg_importances_are_normalized_coefficients() {
        // Only the ten engineered features exist; two get hand-set weights.
        let vocab = empty_vocab();
        let mut w = Tensor::zeros(&[vocab.feature_dim()]);
        w.data_mut()[0] = 2.0;
        w.data_mut()[5] = -1.0;
        let bundle = ModelBundle {
            train_digest: 0,
            payload: Payload::LogReg(LogRegModel {
                vocab,
                w,
                bias: 0.0,
                config: TrainConfig::default(),
            }),
        };
        let report = feature_importance(&bundle, false).unwrap();
        assert_eq!(report.rows[0], ("is_appname_in_frame".to_string(), 1.0));
        let last = report.rows.last().unwrap();
        assert_eq!(last.0, "norm_frame_position");
        assert!((last.1 - -0.5).abs() < 1e-12);
        assert!(report.to_csv().contains("normalization: max absolute"));
    }

    #[test]
    fn heuristic_bundles_have_no_importances() {
        let bundle = ModelBundle { train_digest: 0, payload: Payload::TopFrame };
        assert!(feature_importance(&bundle, false).is_err());
    }

    fn toy_corpus(n: usize) -> Corpus {
        let mut records = Vec::new();
        for k in 0..n {
            let pad = k % 3;
            let mut frames = Vec::new();
            for s in 0..pad {
                frames.push(parse_frame(&format!("ntdll.dll!RtlStep{s}")));
            }
            frames.push(parse_frame("toy.dll!core::CopyBuffer"));
            frames.push(parse_frame("ntdll.dll!RtlUserThreadStart"));
            let class = if k % 2 == 0 { "CLASS_A" } else { "CLASS_B" };
            records
                .push(CrashRecord::new(frames, Some(pad), class, "toy", k as i64).unwrap());
        }
        Corpus::new(records)
    }

    #[test]
    fn evaluate_produces_auditable_report() {
        let corpus = toy_corpus(30);
        let config = TrainConfig::default();
        let (bundle, _) =
            ModelBundle::train(ModelKind::TopFrame, &corpus, &config, 0.0).unwrap();
        let report = evaluate(&bundle, &corpus).unwrap();

        // TopFrame is right exactly when pad == 0, a third of the records.
        assert!((report.overall - 10.0 / 30.0).abs() < 1e-12);
        assert_eq!(report.per_class.len(), 2);
        assert_eq!(report.per_class.iter().map(|r| r.records).sum::<usize>(), 30);
        // Offsets: predicted 0 against true pad in {0,1,2}.
        assert_eq!(report.offsets[&0], 10);
        assert_eq!(report.offsets[&-1], 10);
        assert_eq!(report.offsets[&-2], 10);

        let log = report.prediction_log();
        assert_eq!(report.log_digest, fnv1a(log.as_bytes()));
        assert!((accuracy_from_log(&log).unwrap() - report.overall).abs() < 1e-15);
        assert_eq!(report.to_files().len(), 4);
    }

    #[test]
    fn evaluate_requires_labels() {
        let mut corpus = toy_corpus(4);
        corpus.records[2].blame_index = None;
        let (bundle, _) =
            ModelBundle::train(ModelKind::TopFrame, &toy_corpus(4), &TrainConfig::default(), 0.0)
                .unwrap();
        assert!(evaluate(&bundle, &corpus).is_err());
    }

    #[test]
    fn sequence_importances_sum_candidate_rows() {
        let corpus = toy_corpus(30);
        let config = TrainConfig {
            hidden: 3,
            max_epochs: 1,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (bundle, _) =
            ModelBundle::train(ModelKind::BiLstmCrfAttn, &corpus, &config, 0.0).unwrap();
        let model = bundle.as_sequence().unwrap();

        let report = feature_importance(&bundle, false).unwrap();
        assert_eq!(report.rows.len(), model.vocab.feature_dim());
        let max_abs =
            report.rows.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        assert!((max_abs - 1.0).abs() < 1e-12);
        // Rows are ranked by signed value.
        for pair in report.rows.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }

        // Hand-recompute one feature: summed candidate-gate row over both
        // directions, before normalization; ratios survive normalization.
        let raw = |j: usize| {
            model.params.bilstm.fwd.w_g.row(j).iter().sum::<f64>()
                + model.params.bilstm.bwd.w_g.row(j).iter().sum::<f64>()
        };
        let names = model.vocab.feature_names();
        let by_name: std::collections::HashMap<&str, f64> =
            report.rows.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        let (j0, j1) = (0, 1);
        let reported_ratio = by_name[names[j0].as_str()] / by_name[names[j1].as_str()];
        assert!((reported_ratio - raw(j0) / raw(j1)).abs() < 1e-9);

        let wide = feature_importance(&bundle, true).unwrap();
        assert_ne!(wide.rows, report.rows);
        assert!(wide.to_csv().contains("all-gate"));
    }

    #[test]
    fn learning_curve_produces_both_arms() {
        let corpus = toy_corpus(60);
        let config = TrainConfig {
            hidden: 3,
            max_epochs: 1,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (global, _) =
            ModelBundle::train(ModelKind::BiLstmCrfAttn, &corpus, &config, 0.0).unwrap();

        let target = toy_corpus(50);
        let points = learning_curve(&global, &target, &[0, 20], &config).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].k, 0);
        for p in &points {
            assert!((0.0..=1.0).contains(&p.finetune_acc));
            assert!((0.0..=1.0).contains(&p.scratch_acc));
        }
        let csv = curve_csv(&points);
        assert!(csv.starts_with("K,finetune_acc,scratch_acc\n"));
        assert_eq!(csv.lines().count(), 3);

        // K beyond the adaptation split (80% of 50 = 40) is rejected.
        assert!(learning_curve(&global, &target, &[41], &config).is_err());
    }

    #[test]
    fn curve_rejects_non_sequence_models() {
        let corpus = toy_corpus(20);
        let (top, _) =
            ModelBundle::train(ModelKind::TopFrame, &corpus, &TrainConfig::default(), 0.0)
                .unwrap();
        assert!(learning_curve(&top, &corpus, &[0], &TrainConfig::default()).is_err());
    }
}
