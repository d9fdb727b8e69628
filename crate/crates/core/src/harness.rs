//! Training with PosCE rebuild schedules, evaluation, and the schedule
//! comparison experiment.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::posce::{build_table, lookup_profile, BuildStats, EstimatorConfig, PosceTable, Window};
use crate::textmodel::{
    adam_step, argmax, loss_and_gradients, AdamConfig, AdamState, ClassifierParams, EmbeddingTable, Model, NUM_CLASSES,
};

pub const RUN_LOG_VERSION: u32 = 1;

/// When the PosCE table is (re)built during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Schedule {
    Never,
    /// Build once, at the end of epoch `e`.
    At(u32),
    /// Rebuild at the end of every epoch `<= e`.
    UpTo(u32),
}

impl Schedule {
    pub fn builds_at(self, epoch: u32) -> bool {
        match self {
            Schedule::Never => false,
            Schedule::At(e) => epoch == e,
            Schedule::UpTo(e) => epoch >= 1 && epoch <= e,
        }
    }

    pub fn build_epochs(self, max_epochs: u32) -> Vec<u32> {
        (1..=max_epochs).filter(|&e| self.builds_at(e)).collect()
    }

    /// Column label in the comparison table (`=5`, `<=10`, `never`).
    pub fn column_label(self) -> String {
        match self {
            Schedule::Never => "never".into(),
            Schedule::At(e) => format!("={e}"),
            Schedule::UpTo(e) => format!("<={e}"),
        }
    }

    fn last_epoch(self) -> u32 {
        match self {
            Schedule::Never => 0,
            Schedule::At(e) | Schedule::UpTo(e) => e,
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Never => f.write_str("never"),
            Schedule::At(e) => write!(f, "at:{e}"),
            Schedule::UpTo(e) => write!(f, "upto:{e}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(
                "schedule",
                format!("`{s}` (expected never, at:E or upto:E with E >= 1)"),
            )
        };
        let s_lower = s.trim().to_ascii_lowercase();
        if s_lower == "never" {
            return Ok(Schedule::Never);
        }
        let (kind, epoch) = s_lower.split_once(':').ok_or_else(bad)?;
        let epoch: u32 = epoch.parse().map_err(|_| bad())?;
        if epoch == 0 {
            return Err(bad());
        }
        match kind {
            "at" => Ok(Schedule::At(epoch)),
            "upto" => Ok(Schedule::UpTo(epoch)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub max_epochs: u32,
    pub seed: u64,
    pub schedule: Schedule,
    pub estimator: EstimatorConfig,
    pub max_len: usize,
    pub hidden: usize,
    /// Half-width of the uniform initialisation of the PosCE direction.
    pub posce_init: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Worker threads for batch gradients, table builds and evaluation.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            l2: 1e-5,
            batch_size: 16,
            max_epochs: 20,
            seed: 0,
            schedule: Schedule::At(5),
            estimator: EstimatorConfig::default(),
            max_len: 40,
            hidden: 32,
            posce_init: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |what: &'static str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(what, "must be positive"))
            }
        };
        positive("lr", self.lr > 0.0 && self.lr.is_finite())?;
        positive("batch_size", self.batch_size > 0)?;
        positive("max_epochs", self.max_epochs > 0)?;
        positive("max_len", self.max_len > 0)?;
        positive("hidden", self.hidden > 0)?;
        positive("threads", self.threads > 0)?;
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("l2", "must be non-negative"));
        }
        if !(self.posce_init >= 0.0 && self.posce_init.is_finite()) {
            return Err(Error::invalid("posce_init", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::invalid("adam", "need 0 <= beta < 1 and eps > 0"));
        }
        if self.schedule.last_epoch() > self.max_epochs {
            return Err(Error::invalid(
                "schedule",
                format!("{} goes past max_epochs = {}", self.schedule, self.max_epochs),
            ));
        }
        self.estimator.validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// A sentence prepared for the classifier.
struct Example {
    ids: Vec<usize>,
    aspect: usize,
    label: usize,
}

fn prepare(model_embeddings: &EmbeddingTable, sentences: &[Sentence], max_len: usize) -> Vec<Example> {
    sentences
        .iter()
        .map(|s| {
            let w = Window::new(s, max_len);
            Example {
                ids: model_embeddings.ids(&w.tokens),
                aspect: w.aspect_position(),
                label: s.polarity.index(),
            }
        })
        .collect()
}

/// Metrics for one evaluation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub precision: [f64; NUM_CLASSES],
    pub recall: [f64; NUM_CLASSES],
    pub f1: [f64; NUM_CLASSES],
    /// `confusion[truth][predicted]`.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl EvalReport {
    /// Metrics from `(truth, predicted)` class pairs. Undefined ratios (0/0)
    /// count as 0.
    pub fn from_predictions<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        for (t, p) in pairs {
            confusion[t][p] += 1;
        }
        let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        let mut precision = [0.0; NUM_CLASSES];
        let mut recall = [0.0; NUM_CLASSES];
        let mut f1 = [0.0; NUM_CLASSES];
        for c in 0..NUM_CLASSES {
            let tp = confusion[c][c] as f64;
            let predicted: u64 = (0..NUM_CLASSES).map(|t| confusion[t][c]).sum();
            let actual: u64 = confusion[c].iter().sum();
            precision[c] = ratio(tp, predicted as f64);
            recall[c] = ratio(tp, actual as f64);
            f1[c] = ratio(2.0 * precision[c] * recall[c], precision[c] + recall[c]);
        }
        EvalReport {
            accuracy: ratio(trace as f64, total as f64),
            macro_f1: f1.iter().sum::<f64>() / NUM_CLASSES as f64,
            precision,
            recall,
            f1,
            confusion,
        }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tpositive\tneutral\tnegative\n");
        for (name, row) in [("precision", self.precision), ("recall", self.recall), ("f1", self.f1)] {
            let _ = writeln!(out, "{name}\t{:.6}\t{:.6}\t{:.6}", row[0], row[1], row[2]);
        }
        for (i, name) in ["true_positive", "true_neutral", "true_negative"].iter().enumerate() {
            let c = self.confusion[i];
            let _ = writeln!(out, "{name}\t{}\t{}\t{}", c[0], c[1], c[2]);
        }
        let _ = writeln!(out, "accuracy\t{:.6}", self.accuracy);
        let _ = writeln!(out, "macro_f1\t{:.6}", self.macro_f1);
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy  {:.4}  ({} sentences)", self.accuracy, self.total())?;
        writeln!(f, "macro-F1  {:.4}", self.macro_f1)?;
        writeln!(f, "class      precision  recall  f1")?;
        for (i, name) in ["positive", "neutral", "negative"].iter().enumerate() {
            writeln!(
                f,
                "{name:<10} {:>9.4}  {:>6.4}  {:.4}",
                self.precision[i], self.recall[i], self.f1[i]
            )?;
        }
        Ok(())
    }
}

fn predict_examples(model: &Model, table: &PosceTable, examples: &[Example]) -> Result<Vec<usize>> {
    examples
        .par_iter()
        .map(|ex| {
            let profile = lookup_profile(table, ex.aspect, ex.ids.len());
            model.predict(&ex.ids, &profile, ex.aspect).map(|p| argmax(&p))
        })
        .collect()
}

/// Argmax predictions with profiles looked up from `table`.
pub fn evaluate(model: &Model, table: &PosceTable, corpus: &[Sentence]) -> Result<EvalReport> {
    if corpus.is_empty() {
        return Err(Error::invalid("corpus", "cannot evaluate on an empty corpus"));
    }
    let examples = prepare(&model.embeddings, corpus, model.max_len);
    let preds = predict_examples(model, table, &examples)?;
    Ok(EvalReport::from_predictions(
        examples.iter().map(|e| e.label).zip(preds),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildEvent {
    pub epoch: u32,
    pub stats: BuildStats,
    /// Wall-clock build time. Kept out of the serialized run log so logs stay
    /// byte-reproducible.
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub train_loss: f64,
    pub clamped: usize,
    pub build: Option<BuildEvent>,
    pub test_accuracy: Option<f64>,
    pub test_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
}

impl RunLog {
    pub fn build_epochs(&self) -> Vec<u32> {
        self.epochs
            .iter()
            .filter_map(|r| r.build.as_ref().map(|b| b.epoch))
            .collect()
    }

    /// JSON lines: a header record carrying the config, then one record per
    /// epoch.
    pub fn to_jsonl(&self) -> String {
        let header = serde_json::json!({
            "record": "header",
            "format": "posce-run-log",
            "version": RUN_LOG_VERSION,
            "config": self.config,
        });
        let mut out = serde_json::to_string(&header).expect("serializes");
        out.push('\n');
        for r in &self.epochs {
            let mut v = serde_json::to_value(r).expect("serializes");
            v["record"] = Value::from("epoch");
            out.push_str(&serde_json::to_string(&v).expect("serializes"));
            out.push('\n');
        }
        out
    }

    /// Tab-separated build timings (not reproducible across runs).
    pub fn timings_tsv(&self) -> String {
        let mut out = String::from("epoch\twall_ms\tsentences\texact_games\tsampled_games\n");
        for b in self.epochs.iter().filter_map(|r| r.build.as_ref()) {
            let _ = writeln!(
                out,
                "{}\t{:.3}\t{}\t{}\t{}",
                b.epoch, b.wall_ms, b.stats.sentences, b.stats.exact_games, b.stats.sampled_games
            );
        }
        out
    }
}

pub struct TrainOutcome {
    pub model: Model,
    pub table: PosceTable,
    pub log: RunLog,
}

/// Runs `f` on a rayon pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}

/// Trains a classifier, rebuilding the PosCE table at the scheduled epoch
/// ends. Until the first build every profile is the uniform fallback. A
/// table built at the end of epoch `e` is used from epoch `e + 1` onward and
/// by that epoch's evaluation.
///
/// Per-sentence gradients are computed in parallel and summed in batch order,
/// so the outcome is identical for any thread count.
pub fn train(
    train_set: &Corpus,
    test_set: Option<&Corpus>,
    embeddings: &EmbeddingTable,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("training corpus", "no sentences"));
    }
    with_threads(config.threads, || train_inner(train_set, test_set, embeddings, config))?
}

fn train_inner(
    train_set: &Corpus,
    test_set: Option<&Corpus>,
    embeddings: &EmbeddingTable,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = ClassifierParams::init(embeddings.dim(), config.hidden, config.posce_init, &mut rng);
    let mut model = Model::new(embeddings.clone(), params, config.max_len)?;
    let mut adam = AdamState::new(&model.params);
    let adam_cfg = config.adam();
    let mut table = PosceTable::unbuilt(config.max_len);
    let estimator = config.estimator;

    let examples = prepare(embeddings, &train_set.sentences, config.max_len);
    let test_examples = test_set
        .filter(|c| !c.is_empty())
        .map(|c| prepare(embeddings, &c.sentences, config.max_len));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epochs = Vec::with_capacity(config.max_epochs as usize);

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut clamped = 0;
        for batch in order.chunks(config.batch_size) {
            let outputs = batch
                .par_iter()
                .map(|&i| {
                    let ex = &examples[i];
                    let profile = lookup_profile(&table, ex.aspect, ex.ids.len());
                    let input = model.represent(&ex.ids, &profile, ex.aspect)?;
                    loss_and_gradients(&model.params, &input, ex.label, config.l2)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grads = model.params.zeros_like();
            for out in &outputs {
                grads.add_scaled(&out.gradients, 1.0 / batch.len() as f64);
                loss_sum += out.loss;
                clamped += out.clamped as usize;
            }
            adam_step(&mut model.params, &grads, &mut adam, &adam_cfg);
            if !model.params.is_finite() {
                return Err(Error::NonFinite("parameters after optimizer step"));
            }
        }

        let build = if config.schedule.builds_at(epoch) {
            let start = Instant::now();
            let snapshot = model.clone();
            let est = estimator.with_seed(match estimator {
                EstimatorConfig::Exact => 0,
                EstimatorConfig::Permutation { seed, .. } | EstimatorConfig::Auto { seed, .. } => {
                    seed ^ config.seed.rotate_left(17) ^ epoch as u64
                }
            });
            table = build_table(&snapshot, &train_set.sentences, config.max_len, &est, epoch as i64)?;
            Some(BuildEvent {
                epoch,
                stats: table.stats(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        } else {
            None
        };

        let eval = match &test_examples {
            Some(ex) => {
                let preds = predict_examples(&model, &table, ex)?;
                Some(EvalReport::from_predictions(ex.iter().map(|e| e.label).zip(preds)))
            }
            None => None,
        };

        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / examples.len() as f64,
            clamped,
            build,
            test_accuracy: eval.as_ref().map(|e| e.accuracy),
            test_macro_f1: eval.as_ref().map(|e| e.macro_f1),
        });
    }

    Ok(TrainOutcome {
        model,
        table,
        log: RunLog {
            config: config.clone(),
            epochs,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub schedule: Schedule,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Accuracy change against the baseline, in percentage points.
    pub delta_accuracy_pp: f64,
    pub delta_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleComparison {
    pub baseline: EvalReport,
    pub rows: Vec<ScheduleRow>,
}

impl ScheduleComparison {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("schedule\taccuracy\tmacro_f1\tdelta_acc_pp\tdelta_f1\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:+.4}\t{:+.6}",
                r.schedule, r.accuracy, r.macro_f1, r.delta_accuracy_pp, r.delta_macro_f1
            );
        }
        out
    }

    /// Transposed layout: a header row of schedule columns, then an `Acc`
    /// row of percentage-point deltas and an `F1` row of absolute deltas.
    pub fn to_delta_table(&self) -> String {
        let mut out = String::from("Epoch");
        for r in &self.rows {
            let _ = write!(out, "\t{}", r.schedule.column_label());
        }
        out.push_str("\nAcc");
        for r in &self.rows {
            let _ = write!(out, "\t{:.1}%", r.delta_accuracy_pp);
        }
        out.push_str("\nF1");
        for r in &self.rows {
            let _ = write!(out, "\t{:.3}", r.delta_macro_f1);
        }
        out.push('\n');
        out
    }
}

/// Trains once per schedule (plus a `never` baseline) with a shared seed and
/// reports final test metrics and deltas against the baseline.
pub fn schedule_experiment(
    train_set: &Corpus,
    test_set: &Corpus,
    embeddings: &EmbeddingTable,
    base: &TrainConfig,
    schedules: &[Schedule],
) -> Result<ScheduleComparison> {
    if schedules.is_empty() {
        return Err(Error::invalid("schedules", "need at least one schedule"));
    }
    let run = |schedule: Schedule| -> Result<EvalReport> {
        let cfg = TrainConfig {
            schedule,
            ..base.clone()
        };
        let out = train(train_set, None, embeddings, &cfg)?;
        with_threads(cfg.threads, || evaluate(&out.model, &out.table, &test_set.sentences))?
    };
    let baseline = run(Schedule::Never)?;
    let rows = schedules
        .iter()
        .map(|&s| {
            let report = if s == Schedule::Never {
                baseline.clone()
            } else {
                run(s)?
            };
            Ok(ScheduleRow {
                schedule: s,
                accuracy: report.accuracy,
                macro_f1: report.macro_f1,
                delta_accuracy_pp: 100.0 * (report.accuracy - baseline.accuracy),
                delta_macro_f1: report.macro_f1 - baseline.macro_f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScheduleComparison { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, synthetic_lexicon, SynthConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn schedule_parsing_and_sets() {
        assert_eq!("never".parse::<Schedule>().unwrap(), Schedule::Never);
        assert_eq!("at:5".parse::<Schedule>().unwrap(), Schedule::At(5));
        assert_eq!("UpTo:2".parse::<Schedule>().unwrap(), Schedule::UpTo(2));
        assert!("at:0".parse::<Schedule>().is_err());
        assert!("every:3".parse::<Schedule>().is_err());
        assert_eq!(Schedule::At(5).build_epochs(20), vec![5]);
        assert_eq!(Schedule::UpTo(2).build_epochs(20), vec![1, 2]);
        assert!(Schedule::Never.build_epochs(20).is_empty());
        assert_eq!(Schedule::UpTo(3).to_string(), "upto:3");
    }

    #[test]
    fn one_class_predictor_metrics() {
        let pairs = (0..3).flat_map(|t| std::iter::repeat_n((t, 0), 10));
        let r = EvalReport::from_predictions(pairs);
        assert_eq!(r.accuracy, 1.0 / 3.0);
        assert_abs_diff_eq!(r.f1[0], 0.5, epsilon = 1e-15);
        assert_eq!((r.f1[1], r.f1[2]), (0.0, 0.0));
        assert_abs_diff_eq!(r.macro_f1, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let r = EvalReport::from_predictions([(0, 0), (1, 1), (2, 2), (2, 2)]);
        assert_eq!((r.accuracy, r.macro_f1), (1.0, 1.0));
        let r = EvalReport::from_predictions([(0, 0), (2, 2)]);
        assert_eq!(r.f1[1], 0.0);
        assert_eq!(r.total(), 2);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            schedule: Schedule::At(30),
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    fn small_setup() -> (Corpus, Corpus, EmbeddingTable) {
        let (train, test) = generate_synthetic(&SynthConfig {
            train_size: 60,
            test_size: 30,
            max_len: 6,
            seed: 3,
        })
        .unwrap();
        let emb = EmbeddingTable::random(&synthetic_lexicon(), 8, 1.0, 3).unwrap();
        (train, test, emb)
    }

    #[test]
    fn never_schedule_keeps_the_table_unbuilt() {
        let (train, test, emb) = small_setup();
        let cfg = TrainConfig {
            schedule: Schedule::Never,
            max_epochs: 3,
            max_len: 6,
            hidden: 4,
            ..TrainConfig::default()
        };
        let out = super::train(&train, Some(&test), &emb, &cfg).unwrap();
        assert!(!out.table.is_built());
        assert!(out.log.build_epochs().is_empty());
        assert_eq!(out.log.epochs.len(), 3);
        assert!(out.log.epochs.iter().all(|r| r.test_accuracy.is_some()));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (train, test, emb) = small_setup();
        let cfg = TrainConfig {
            schedule: Schedule::UpTo(2),
            max_epochs: 3,
            max_len: 6,
            hidden: 4,
            ..TrainConfig::default()
        };
        let a = super::train(&train, Some(&test), &emb, &cfg).unwrap();
        let b = super::train(
            &train,
            Some(&test),
            &emb,
            &TrainConfig {
                threads: 4,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.table, b.table);
        assert_eq!(a.log.build_epochs(), vec![1, 2]);
        // Wall time is not logged, so compare what is.
        let json = |o: &TrainOutcome| serde_json::to_string(&o.log.epochs).unwrap();
        assert_eq!(json(&a), json(&b));
    }

    #[test]
    fn self_comparison_has_zero_deltas() {
        let (train, test, emb) = small_setup();
        let cfg = TrainConfig {
            max_epochs: 2,
            max_len: 6,
            hidden: 4,
            ..TrainConfig::default()
        };
        let cmp = schedule_experiment(&train, &test, &emb, &cfg, &[Schedule::Never]).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].delta_accuracy_pp, 0.0);
        assert_eq!(cmp.rows[0].delta_macro_f1, 0.0);
        assert_eq!(cmp.to_delta_table().lines().count(), 3);
    }
}
