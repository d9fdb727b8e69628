//! The `posce` command line.
//!
//! Settings resolve as flags, then the `--config` TOML file, then built-in
//! defaults. Failures print one `error[<class>]: <message>` line on stderr and
//! exit with the class's code (usage 2, io 3, parse 4, validation 5,
//! numeric 6).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{generate_synthetic, synthetic_lexicon, tokenize, Corpus, Polarity, Sentence, Split, SynthConfig};
use crate::error::{Error, ErrorClass, Result};
use crate::harness::{evaluate, schedule_experiment, train, with_threads, Schedule, TrainConfig};
use crate::posce::{
    build_table, game_from_sentence, lookup_profile, sentence_profile, AspectGameSpec, EstimatorConfig, PosceTable,
    Window,
};
use crate::shapley::{Coalition, CoalitionGame, Method};
use crate::textmodel::{argmax, EmbeddingTable, Model};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TABLE_FILE: &str = "posce_table.bin";
pub const TABLE_TSV_FILE: &str = "posce_table.tsv";
pub const RUN_LOG_FILE: &str = "run_log.jsonl";
pub const TIMINGS_FILE: &str = "build_timings.tsv";

#[derive(Debug, Parser)]
#[command(
    name = "posce",
    version,
    about = "Position-based contributive embeddings for aspect sentiment"
)]
pub struct Cli {
    /// TOML file with default settings
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier and its PosCE table
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset
    Eval(EvalArgs),
    /// Build a PosCE table from a checkpoint and a dataset
    PosceBuild(BuildArgs),
    /// Print per-word Shapley contributions for one sentence
    Attribute(AttributeArgs),
    /// Write a synthetic train/test corpus and matching word vectors
    Synth(SynthArgs),
    /// Compare PosCE rebuild schedules against the never-built baseline
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args, Default)]
pub struct TrainingFlags {
    /// Training dataset
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out dataset evaluated after every epoch
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Word-vector text file (token v1 .. vk per line)
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<u32>,
    /// never | at:E | upto:E
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Half-width of the PosCE direction initialisation
    #[arg(long = "posce-init")]
    pub posce_init: Option<f64>,
    #[command(flatten)]
    pub estimator: EstimatorFlags,
}

#[derive(Debug, Args, Default, Clone)]
pub struct EstimatorFlags {
    /// Permutation samples for sentences beyond the exact cap
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest context size solved by exact enumeration
    #[arg(long = "exact-cap")]
    pub exact_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub flags: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub flags: TrainingFlags,
    /// Comma-separated schedules
    #[arg(long, default_value = "at:1,upto:5,at:5,upto:10,at:10,upto:20,at:20")]
    pub schedules: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// PosCE table; an unbuilt table is used when omitted
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Epoch recorded in the table
    #[arg(long, default_value_t = 0)]
    pub epoch: i64,
    #[command(flatten)]
    pub estimator: EstimatorFlags,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub text: String,
    /// First aspect token (index into the tokenized text)
    #[arg(long = "aspect-from")]
    pub aspect_from: usize,
    /// One past the last aspect token
    #[arg(long = "aspect-to")]
    pub aspect_to: usize,
    /// Payoff class: 0, 1, 2 or `true` (needs --label); default is the predicted class
    #[arg(long = "class")]
    pub class: Option<String>,
    /// Ground-truth polarity
    #[arg(long)]
    pub label: Option<String>,
    /// Also write the per-token rows as tab-separated text
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Training sentences
    #[arg(long, default_value_t = 300)]
    pub size: usize,
    #[arg(long = "test-size", default_value_t = 150)]
    pub test_size: usize,
    #[arg(long = "max-len", default_value_t = 6)]
    pub max_len: usize,
    /// Dimension of the generated word vectors
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
}

/// Settings accepted in the `--config` file. Every key is optional.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub lr: Option<f64>,
    pub l2: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<u32>,
    pub seed: Option<u64>,
    pub schedule: Option<String>,
    pub max_len: Option<usize>,
    pub hidden: Option<usize>,
    pub posce_init: Option<f64>,
    pub threads: Option<usize>,
    pub samples: Option<usize>,
    pub exact_cap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            source_name: path.display().to_string(),
            line: 0,
            reason: e.to_string().replace('\n', " "),
        })
    }
}

/// Fully resolved settings for a run.
#[derive(Debug, Clone, Serialize)]
pub struct CliConfig {
    pub train: TrainConfig,
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub out: PathBuf,
}

impl CliConfig {
    fn resolve(cli: &Cli, flags: Option<&TrainingFlags>, est: Option<&EstimatorFlags>) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let empty = TrainingFlags::default();
        let f = flags.unwrap_or(&empty);
        let est = est.unwrap_or(&f.estimator);
        let d = TrainConfig::default();
        let schedule = match f.schedule.as_ref().or(file.schedule.as_ref()) {
            Some(s) => s.parse()?,
            None => d.schedule,
        };
        let seed = cli.seed.or(file.seed).unwrap_or(d.seed);
        let EstimatorConfig::Auto {
            exact_max_players,
            samples,
            ..
        } = d.estimator
        else {
            unreachable!("default estimator is Auto")
        };
        let train = TrainConfig {
            lr: f.lr.or(file.lr).unwrap_or(d.lr),
            l2: f.l2.or(file.l2).unwrap_or(d.l2),
            batch_size: f.batch.or(file.batch_size).unwrap_or(d.batch_size),
            max_epochs: f.epochs.or(file.max_epochs).unwrap_or(d.max_epochs),
            seed,
            schedule,
            estimator: EstimatorConfig::Auto {
                exact_max_players: est.exact_cap.or(file.exact_cap).unwrap_or(exact_max_players),
                samples: est.samples.or(file.samples).unwrap_or(samples),
                seed,
            },
            max_len: f.max_len.or(file.max_len).unwrap_or(d.max_len),
            hidden: f.hidden.or(file.hidden).unwrap_or(d.hidden),
            posce_init: f.posce_init.or(file.posce_init).unwrap_or(d.posce_init),
            threads: cli.threads.or(file.threads).unwrap_or(d.threads),
            ..d
        };
        train.validate()?;
        Ok(CliConfig {
            train,
            data: f.data.clone().or(file.data),
            test: f.test.clone().or(file.test),
            vectors: f.vectors.clone().or(file.vectors),
            out: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    fn to_value(&self) -> Value {
        json!({
            "format_version": 1,
            "settings": self,
        })
    }

    fn require<'a>(what: &'static str, p: &'a Option<PathBuf>) -> Result<&'a Path> {
        p.as_deref()
            .ok_or_else(|| Error::invalid("arguments", format!("--{what} is required")))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn check_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[{}]: {first}", ErrorClass::Usage.name());
            eprint!("{rendered}");
            return ErrorClass::Usage.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let class = e.class();
            eprintln!("error[{}]: {}", class.name(), e.to_string().replace('\n', " "));
            class.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::PosceBuild(a) => cmd_posce_build(cli, a),
        Command::Attribute(a) => cmd_attribute(cli, a),
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Experiment(a) => cmd_experiment(cli, a),
    }
}

fn load_training_inputs(cfg: &CliConfig) -> Result<(Corpus, Option<Corpus>, EmbeddingTable)> {
    let data = CliConfig::require("data", &cfg.data)?;
    let vectors = CliConfig::require("vectors", &cfg.vectors)?;
    check_exists(data)?;
    check_exists(vectors)?;
    let train_set = Corpus::load(data, Split::Train)?;
    let test_set = cfg.test.as_deref().map(|p| Corpus::load(p, Split::Test)).transpose()?;
    let embeddings = EmbeddingTable::load_text(vectors)?;
    Ok((train_set, test_set, embeddings))
}

pub fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let cfg = CliConfig::resolve(cli, Some(&args.flags), None)?;
    let (train_set, test_set, embeddings) = load_training_inputs(&cfg)?;
    let outcome = train(&train_set, test_set.as_ref(), &embeddings, &cfg.train)?;

    ensure_dir(&cfg.out)?;
    let echo = cfg.to_value();
    outcome.model.save(&cfg.out.join(CHECKPOINT_FILE), &echo)?;
    outcome.table.save(&cfg.out.join(TABLE_FILE), &echo)?;
    write_text(&cfg.out.join(TABLE_TSV_FILE), &outcome.table.to_tsv())?;
    write_text(&cfg.out.join(RUN_LOG_FILE), &outcome.log.to_jsonl())?;
    write_text(&cfg.out.join(TIMINGS_FILE), &outcome.log.timings_tsv())?;

    let last = outcome.log.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs on {} sentences; final loss {:.4}; PosCE builds at {:?}",
        last.epoch,
        train_set.len(),
        last.train_loss,
        outcome.log.build_epochs()
    );
    if let (Some(acc), Some(f1)) = (last.test_accuracy, last.test_macro_f1) {
        println!("test accuracy {acc:.4}  macro-F1 {f1:.4}");
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn load_table_or_unbuilt(path: Option<&Path>, max_len: usize) -> Result<PosceTable> {
    match path {
        Some(p) => {
            let (table, _) = PosceTable::load(p)?;
            if table.max_len() != max_len {
                return Err(Error::invalid(
                    "PosCE table",
                    format!("max_len {} does not match the checkpoint's {max_len}", table.max_len()),
                ));
            }
            Ok(table)
        }
        None => Ok(PosceTable::unbuilt(max_len)),
    }
}

pub fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let cfg = CliConfig::resolve(cli, None, None)?;
    let (model, _) = Model::load(&args.checkpoint)?;
    let table = load_table_or_unbuilt(args.table.as_deref(), model.max_len)?;
    check_exists(&args.data)?;
    let corpus = Corpus::load(&args.data, Split::Test)?;
    let report = with_threads(cfg.train.threads, || evaluate(&model, &table, &corpus.sentences))??;
    print!("{report}");
    println!();
    print!("{}", report.to_tsv());
    Ok(())
}

pub fn cmd_posce_build(cli: &Cli, args: &BuildArgs) -> Result<()> {
    let cfg = CliConfig::resolve(cli, None, Some(&args.estimator))?;
    let (model, _) = Model::load(&args.checkpoint)?;
    check_exists(&args.data)?;
    let corpus = Corpus::load(&args.data, Split::Train)?;
    let est = cfg.train.estimator;
    let table = with_threads(cfg.train.threads, || {
        build_table(&model, &corpus.sentences, model.max_len, &est, args.epoch)
    })??;
    ensure_dir(&cfg.out)?;
    let echo = json!({
        "format_version": 1,
        "command": "posce-build",
        "checkpoint": args.checkpoint,
        "data": args.data,
        "estimator": est,
        "epoch": args.epoch,
    });
    table.save(&cfg.out.join(TABLE_FILE), &echo)?;
    write_text(&cfg.out.join(TABLE_TSV_FILE), &table.to_tsv())?;
    let s = table.stats();
    println!(
        "built PosCE table from {} sentences ({} exact, {} sampled) into {}",
        s.sentences,
        s.exact_games,
        s.sampled_games,
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let cfg = CliConfig::resolve(cli, None, None)?;
    let synth = SynthConfig {
        train_size: args.size,
        test_size: args.test_size,
        max_len: args.max_len,
        seed: cfg.train.seed,
    };
    let (train_set, test_set) = generate_synthetic(&synth)?;
    let vectors = EmbeddingTable::random(&synthetic_lexicon(), args.dim, 1.0, cfg.train.seed)?;
    ensure_dir(&cfg.out)?;
    train_set.save(&cfg.out.join("train.tsv"))?;
    test_set.save(&cfg.out.join("test.tsv"))?;
    vectors.save_text(&cfg.out.join("vectors.txt"))?;
    let h = train_set.class_histogram();
    println!(
        "wrote {} train / {} test sentences (train classes {}/{}/{}) and {}-d vectors to {}",
        train_set.len(),
        test_set.len(),
        h[0],
        h[1],
        h[2],
        args.dim,
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    let cfg = CliConfig::resolve(cli, Some(&args.flags), None)?;
    let schedules = args
        .schedules
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<Schedule>>>()?;
    for s in &schedules {
        TrainConfig {
            schedule: *s,
            ..cfg.train.clone()
        }
        .validate()?;
    }
    let (train_set, test_set, embeddings) = load_training_inputs(&cfg)?;
    let test_set = test_set.ok_or_else(|| Error::invalid("arguments", "--test is required"))?;
    let cmp = schedule_experiment(&train_set, &test_set, &embeddings, &cfg.train, &schedules)?;
    ensure_dir(&cfg.out)?;
    let mut tsv = format!("# {}\n", serde_json::to_string(&cfg.to_value()).expect("serializes"));
    tsv.push_str(&cmp.to_tsv());
    write_text(&cfg.out.join("schedule_comparison.tsv"), &tsv)?;
    println!(
        "baseline accuracy {:.4}  macro-F1 {:.4}",
        cmp.baseline.accuracy, cmp.baseline.macro_f1
    );
    print!("{}", cmp.to_delta_table());
    Ok(())
}

/// One row of an attribution report.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionRow {
    pub position: usize,
    pub token: String,
    pub is_aspect: bool,
    pub raw: f64,
    pub normalized: f64,
    pub historical: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub rows: Vec<AttributionRow>,
    pub probabilities: [f64; 3],
    pub payoff_class: usize,
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
    pub full_payoff: f64,
    pub aspect_only_payoff: f64,
}

impl Attribution {
    pub fn raw_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.raw).sum()
    }

    pub fn render(&self) -> String {
        let names = ["positive", "neutral", "negative"];
        let mut out = String::new();
        let _ = writeln!(
            out,
            "probabilities: positive {:.4}  neutral {:.4}  negative {:.4}",
            self.probabilities[0], self.probabilities[1], self.probabilities[2]
        );
        let _ = writeln!(
            out,
            "payoff class: {} ({})",
            self.payoff_class, names[self.payoff_class]
        );
        match self.method {
            Method::Exact => out.push_str("estimator: exact\n"),
            Method::Permutation => {
                let _ = writeln!(
                    out,
                    "estimator: permutation samples={} seed={}",
                    self.samples, self.seed
                );
            }
        }
        let _ = writeln!(
            out,
            "{:>4}  {:<16} {:>10} {:>10} {:>10}",
            "pos", "token", "shapley", "profile", "posce"
        );
        for r in &self.rows {
            let token = if r.is_aspect {
                format!("[{}]", r.token)
            } else {
                r.token.clone()
            };
            let _ = writeln!(
                out,
                "{:>4}  {:<16} {:>10.6} {:>10.6} {:>10.6}",
                r.position, token, r.raw, r.normalized, r.historical
            );
        }
        let gap = self.full_payoff - self.aspect_only_payoff;
        let diff = (self.raw_sum() - gap).abs();
        let verdict = match self.method {
            Method::Exact if diff <= 1e-6 => "ok",
            Method::Exact => "FAILED",
            Method::Permutation => "sampled",
        };
        let _ = writeln!(
            out,
            "efficiency: sum={:.9} P(full)-P(aspect)={:.9} |diff|={diff:.2e} {verdict}",
            self.raw_sum(),
            gap
        );
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("position\ttoken\taspect\tshapley\tprofile\tposce\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.position, r.token, r.is_aspect as u8, r.raw, r.normalized, r.historical
            );
        }
        out
    }
}

/// How the attribution payoff class is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffChoice {
    Predicted,
    TrueLabel,
    Class(usize),
}

impl std::str::FromStr for PayoffChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "true" => Ok(PayoffChoice::TrueLabel),
            "0" | "1" | "2" => Ok(PayoffChoice::Class(s.trim().parse().expect("digit"))),
            other => Err(Error::invalid("class", format!("`{other}` (expected 0, 1, 2 or true)"))),
        }
    }
}

/// Shapley attribution of one sentence's words, with the table's historical
/// profile for the aspect position alongside.
#[allow(clippy::too_many_arguments)]
pub fn attribute(
    model: &Model,
    table: &PosceTable,
    text: &str,
    aspect_from: usize,
    aspect_to: usize,
    choice: PayoffChoice,
    label: Option<Polarity>,
    estimator: &EstimatorConfig,
) -> Result<Attribution> {
    let tokens = tokenize(text);
    let sentence = Sentence::new(
        "attribute",
        tokens,
        aspect_from,
        aspect_to,
        label.unwrap_or(Polarity::Positive),
    )?;
    let window = Window::new(&sentence, model.max_len);
    let ids = model.embeddings.ids(&window.tokens);
    let t = window.aspect_position();
    let historical = lookup_profile(table, t, window.len());
    let probabilities = model.predict(&ids, &historical, t)?;

    let payoff_class = match choice {
        PayoffChoice::Predicted => argmax(&probabilities),
        PayoffChoice::Class(c) => c,
        PayoffChoice::TrueLabel => label
            .ok_or_else(|| Error::invalid("class", "`true` needs --label"))?
            .index(),
    };
    let spec = AspectGameSpec {
        sentence: &sentence,
        label: label.map_or(payoff_class, Polarity::index),
        payoff_class,
    };
    let game = game_from_sentence(model, &spec)?;
    let full_payoff = game.payoff(Coalition::full(game.player_count()))?;
    let aspect_only_payoff = game.payoff(Coalition::EMPTY)?;
    let profile = sentence_profile(model, &spec, estimator)?;

    let max = profile.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = profile.values.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let rows = window
        .tokens
        .iter()
        .enumerate()
        .map(|(i, tok)| AttributionRow {
            position: i,
            token: tok.clone(),
            is_aspect: i >= window.aspect_from && i < window.aspect_to,
            raw: profile.values[i],
            normalized: exps[i] / z,
            historical: historical[i],
        })
        .collect();
    Ok(Attribution {
        rows,
        probabilities,
        payoff_class,
        method: profile.shapley.method,
        samples: profile.shapley.sample_count,
        seed: profile.shapley.seed,
        full_payoff,
        aspect_only_payoff,
    })
}

pub fn cmd_attribute(cli: &Cli, args: &AttributeArgs) -> Result<()> {
    let cfg = CliConfig::resolve(cli, None, Some(&args.estimator))?;
    let (model, _) = Model::load(&args.checkpoint)?;
    let table = load_table_or_unbuilt(args.table.as_deref(), model.max_len)?;
    let label = args.label.as_deref().map(str::parse::<Polarity>).transpose()?;
    let choice = match args.class.as_deref() {
        Some(c) => c.parse()?,
        None => PayoffChoice::Predicted,
    };
    let report = attribute(
        &model,
        &table,
        &args.text,
        args.aspect_from,
        args.aspect_to,
        choice,
        label,
        &cfg.train.estimator,
    )?;
    print!("{}", report.render());
    if let Some(p) = &args.tsv {
        write_text(p, &report.to_tsv())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmodel::ClassifierParams;

    fn constant_model() -> Model {
        let emb = EmbeddingTable::random(&["the", "screen", "is", "great"], 4, 1.0, 0).unwrap();
        Model::new(emb, ClassifierParams::zeros(4, 3), 8).unwrap()
    }

    #[test]
    fn aspect_only_attribution() {
        let model = constant_model();
        let table = PosceTable::unbuilt(8);
        let a = attribute(
            &model,
            &table,
            "screen",
            0,
            1,
            PayoffChoice::Predicted,
            None,
            &EstimatorConfig::default(),
        )
        .unwrap();
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows[0].raw, 0.0);
        assert_eq!(a.rows[0].normalized, 1.0);
    }

    #[test]
    fn constant_model_attribution_is_flat() {
        let model = constant_model();
        let table = PosceTable::unbuilt(8);
        let a = attribute(
            &model,
            &table,
            "The screen is great!",
            1,
            2,
            PayoffChoice::Class(2),
            None,
            &EstimatorConfig::default(),
        )
        .unwrap();
        assert!(a.rows.iter().all(|r| r.raw == 0.0));
        assert!(a.rows.iter().all(|r| (r.normalized - 0.25).abs() < 1e-15));
        assert!(a.render().contains(" ok"));
    }

    #[test]
    fn true_class_needs_a_label() {
        let model = constant_model();
        let table = PosceTable::unbuilt(8);
        let err = attribute(
            &model,
            &table,
            "the screen",
            1,
            2,
            PayoffChoice::TrueLabel,
            None,
            &EstimatorConfig::Exact,
        );
        assert!(err.is_err());
        assert!(attribute(
            &model,
            &table,
            "the screen",
            1,
            3,
            PayoffChoice::Predicted,
            None,
            &EstimatorConfig::Exact
        )
        .is_err());
    }

    #[test]
    fn payoff_choice_parsing() {
        assert_eq!("true".parse::<PayoffChoice>().unwrap(), PayoffChoice::TrueLabel);
        assert_eq!("2".parse::<PayoffChoice>().unwrap(), PayoffChoice::Class(2));
        assert!("3".parse::<PayoffChoice>().is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "lr = 0.5\nhidden = 7\nschedule = \"upto:3\"\n").unwrap();
        let cli = Cli::try_parse_from(["posce", "--config", p.to_str().unwrap(), "train", "--lr", "0.25"]).unwrap();
        let Command::Train(args) = &cli.command else { panic!() };
        let cfg = CliConfig::resolve(&cli, Some(&args.flags), None).unwrap();
        assert_eq!(cfg.train.lr, 0.25);
        assert_eq!(cfg.train.hidden, 7);
        assert_eq!(cfg.train.schedule, Schedule::UpTo(3));
        assert_eq!(cfg.train.batch_size, 16);

        std::fs::write(&p, "learning_rate = 0.5\n").unwrap();
        let err = CliConfig::resolve(&cli, Some(&args.flags), None).unwrap_err();
        assert_eq!(err.class(), ErrorClass::Parse);
    }
}
