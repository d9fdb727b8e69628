//! Dataset records, tokenization and the synthetic aspect corpus.
//!
//! Native dataset format: UTF-8, one record per line, tab-separated
//!
//! ```text
//! id <TAB> text <TAB> aspect_char_from <TAB> aspect_char_to <TAB> polarity
//! ```
//!
//! Character offsets count Unicode scalar values and are half-open. Lines
//! that are blank or start with `#` are skipped. A line starting with `{` is
//! read as a JSON object with the keys `id`, `text`, `from`, `to`, `polarity`.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive = 0,
    Neutral = 1,
    Negative = 2,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Neutral, Polarity::Negative];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Polarity> {
        Polarity::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Neutral => "neutral",
            Polarity::Negative => "negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Polarity::Positive),
            "neutral" => Ok(Polarity::Neutral),
            "negative" => Ok(Polarity::Negative),
            other => Err(Error::invalid(
                "polarity",
                format!("unknown polarity `{other}` (expected positive, neutral or negative)"),
            )),
        }
    }
}

/// A tokenized sentence with a half-open aspect span over token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub aspect_from: usize,
    pub aspect_to: usize,
    pub polarity: Polarity,
}

impl Sentence {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        aspect_from: usize,
        aspect_to: usize,
        polarity: Polarity,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("sentence", "no tokens"));
        }
        if !(aspect_from < aspect_to && aspect_to <= tokens.len()) {
            return Err(Error::invalid(
                "aspect span",
                format!(
                    "[{aspect_from}, {aspect_to}) is not a nonempty span of {} tokens",
                    tokens.len()
                ),
            ));
        }
        Ok(Sentence {
            id: id.into(),
            tokens,
            aspect_from,
            aspect_to,
            polarity,
        })
    }

    /// Position of the aspect term (its first token).
    pub fn aspect_position(&self) -> usize {
        self.aspect_from
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// Character offsets of the aspect span in [`Sentence::text`].
    pub fn aspect_char_span(&self) -> (usize, usize) {
        let chars = |ts: &[String]| ts.iter().map(|t| t.chars().count()).sum::<usize>();
        let from = chars(&self.tokens[..self.aspect_from]) + self.aspect_from;
        let to = from + chars(&self.tokens[self.aspect_from..self.aspect_to]) + (self.aspect_to - self.aspect_from - 1);
        (from, to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub split: Split,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>, split: Split) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::invalid("corpus", format!("duplicate sentence id `{}`", s.id)));
            }
        }
        Ok(Corpus { sentences, split })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Distinct token count.
    pub fn vocabulary_size(&self) -> usize {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter())
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn class_histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for s in &self.sentences {
            h[s.polarity.index()] += 1;
        }
        h
    }

    pub fn load(path: &Path, split: Split) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Corpus::read(BufReader::new(file), &path.display().to_string(), split)
    }

    pub fn read<R: BufRead>(reader: R, source_name: &str, split: Split) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let at = |reason: String| Error::Parse {
                source_name: source_name.to_owned(),
                line: lineno,
                reason,
            };
            let line = line.map_err(|e| at(e.to_string()))?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let record = parse_record(trimmed).map_err(|e| at(e.to_string()))?;
            let sentence = record.into_sentence().map_err(|e| at(e.to_string()))?;
            if !seen.insert(sentence.id.clone()) {
                return Err(at(format!("duplicate sentence id `{}`", sentence.id)));
            }
            sentences.push(sentence);
        }
        Ok(Corpus { sentences, split })
    }

    /// Writes the corpus in the native tab-separated format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "# id\ttext\taspect_char_from\taspect_char_to\tpolarity").map_err(io)?;
        for s in &self.sentences {
            let (from, to) = s.aspect_char_span();
            writeln!(w, "{}\t{}\t{from}\t{to}\t{}", s.id, s.text(), s.polarity).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Deserialize)]
struct Record {
    id: String,
    text: String,
    from: usize,
    to: usize,
    polarity: String,
}

fn parse_record(line: &str) -> Result<Record> {
    if line.trim_start().starts_with('{') {
        return serde_json::from_str(line).map_err(|e| Error::format("record", e.to_string()));
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::format(
            "record",
            format!("expected 5 tab-separated fields, found {}", fields.len()),
        ));
    }
    let offset = |name: &str, s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::format("record", format!("{name} `{s}` is not a character offset")))
    };
    Ok(Record {
        id: fields[0].trim().to_owned(),
        text: fields[1].to_owned(),
        from: offset("aspect_char_from", fields[2])?,
        to: offset("aspect_char_to", fields[3])?,
        polarity: fields[4].to_owned(),
    })
}

impl Record {
    fn into_sentence(self) -> Result<Sentence> {
        if self.id.is_empty() {
            return Err(Error::invalid("record", "empty id"));
        }
        let polarity: Polarity = self.polarity.parse()?;
        let n_chars = self.text.chars().count();
        if !(self.from < self.to && self.to <= n_chars) {
            return Err(Error::invalid(
                "aspect span",
                format!(
                    "characters [{}, {}) lie outside the {n_chars}-character text",
                    self.from, self.to
                ),
            ));
        }
        let spans = tokenize_with_spans(&self.text);
        let hits: Vec<usize> = spans
            .iter()
            .enumerate()
            .filter(|(_, (_, s, e))| *s < self.to && self.from < *e)
            .map(|(i, _)| i)
            .collect();
        let (Some(&first), Some(&last)) = (hits.first(), hits.last()) else {
            return Err(Error::invalid(
                "aspect span",
                format!("characters [{}, {}) cover no token", self.from, self.to),
            ));
        };
        let tokens = spans.into_iter().map(|(t, _, _)| t).collect();
        Sentence::new(self.id, tokens, first, last + 1, polarity)
    }
}

/// Lowercases, splits on Unicode whitespace and strips ASCII punctuation from
/// both ends of each token. Tokens that strip to nothing are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_spans(text).into_iter().map(|(t, _, _)| t).collect()
}

/// Tokens with the character span of the whitespace chunk they came from.
fn tokenize_with_spans(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut chunk = String::new();
    let mut flush = |chunk: &mut String, s: usize, e: usize| {
        let token = chunk.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase();
        if !token.is_empty() {
            out.push((token, s, e));
        }
        chunk.clear();
    };
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        n = i + 1;
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                flush(&mut chunk, s, i);
            }
        } else {
            start.get_or_insert(i);
            chunk.push(c);
        }
    }
    if let Some(s) = start {
        flush(&mut chunk, s, n);
    }
    out
}

// Synthetic corpus.

const ASPECTS: &[&str] = &[
    "screen", "battery", "keyboard", "service", "food", "price", "camera", "speaker", "staff", "menu", "display",
    "trackpad",
];
const POSITIVE: &[&str] = &["great", "excellent", "lovely", "superb", "good"];
const NEUTRAL: &[&str] = &["average", "ordinary", "standard", "typical", "usual"];
const NEGATIVE: &[&str] = &["awful", "terrible", "poor", "bad", "horrible"];
const FILLERS: &[&str] = &[
    "the", "a", "was", "and", "it", "really", "this", "that", "with", "then", "we", "so", "also", "there", "of",
];

/// Size and seed of a synthetic train/test pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_size: 300,
            test_size: 150,
            max_len: 6,
            seed: 1,
        }
    }
}

/// Probability that the opinion word sits two positions left of the aspect;
/// otherwise it sits immediately to the right.
const LEFT_OFFSET_PROB: f64 = 0.8;
/// Probability of a conflicting opinion word far from the aspect.
const DISTRACTOR_PROB: f64 = 0.85;
/// Distractors keep at least this distance from the aspect.
const DISTRACTOR_MIN_DISTANCE: usize = 3;

pub fn opinion_words(p: Polarity) -> &'static [&'static str] {
    match p {
        Polarity::Positive => POSITIVE,
        Polarity::Neutral => NEUTRAL,
        Polarity::Negative => NEGATIVE,
    }
}

pub fn opinion_polarity(token: &str) -> Option<Polarity> {
    Polarity::ALL.into_iter().find(|&p| opinion_words(p).contains(&token))
}

/// Every token the generator can emit.
pub fn synthetic_lexicon() -> Vec<&'static str> {
    ASPECTS
        .iter()
        .chain(POSITIVE)
        .chain(NEUTRAL)
        .chain(NEGATIVE)
        .chain(FILLERS)
        .copied()
        .collect()
}

/// The generator's own labeling rule: the polarity of the opinion word
/// closest to the aspect (ties toward the left).
pub fn oracle_label(sentence: &Sentence) -> Option<Polarity> {
    let t = sentence.aspect_position();
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter_map(|(i, tok)| opinion_polarity(tok).map(|p| (t.abs_diff(i), i, p)))
        .min_by_key(|&(d, i, _)| (d, i))
        .map(|(_, _, p)| p)
}

/// Generates a balanced train/test pair where the label is carried by an
/// opinion word at a mostly fixed offset from the aspect, and a conflicting
/// distractor opinion usually appears elsewhere in the sentence.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Corpus, Corpus)> {
    if config.train_size < 30 || config.test_size < 30 {
        return Err(Error::invalid(
            "synthetic corpus size",
            format!(
                "train and test need at least 30 sentences, got {} and {}",
                config.train_size, config.test_size
            ),
        ));
    }
    if config.max_len < 5 {
        return Err(Error::invalid(
            "synthetic max_len",
            format!("need at least 5, got {}", config.max_len),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let train = generate_split(&mut rng, config.train_size, config.max_len, "train", Split::Train)?;
    let test = generate_split(&mut rng, config.test_size, config.max_len, "test", Split::Test)?;
    Ok((train, test))
}

fn generate_split(rng: &mut ChaCha8Rng, size: usize, max_len: usize, prefix: &str, split: Split) -> Result<Corpus> {
    let mut labels: Vec<Polarity> = (0..size).map(|i| Polarity::ALL[i % 3]).collect();
    labels.shuffle(rng);
    let sentences = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| generate_sentence(rng, format!("{prefix}-{i:06}"), label, max_len))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(sentences, split)
}

fn generate_sentence(rng: &mut ChaCha8Rng, id: String, label: Polarity, max_len: usize) -> Result<Sentence> {
    let len = rng.gen_range(5..=max_len);
    let left = rng.gen_bool(LEFT_OFFSET_PROB);
    // Aspect position leaving room for the opinion word.
    let aspect = if left {
        rng.gen_range(2..len)
    } else {
        rng.gen_range(0..len - 1)
    };
    let opinion = if left { aspect - 2 } else { aspect + 1 };

    let mut tokens: Vec<String> = (0..len)
        .map(|_| FILLERS.choose(rng).expect("fillers").to_string())
        .collect();
    tokens[aspect] = ASPECTS.choose(rng).expect("aspects").to_string();
    tokens[opinion] = opinion_words(label).choose(rng).expect("opinions").to_string();

    if rng.gen_bool(DISTRACTOR_PROB) {
        let slots: Vec<usize> = (0..len)
            .filter(|&i| i.abs_diff(aspect) >= DISTRACTOR_MIN_DISTANCE)
            .collect();
        if let Some(&slot) = slots.choose(rng) {
            let others: Vec<Polarity> = Polarity::ALL.into_iter().filter(|&p| p != label).collect();
            let p = *others.choose(rng).expect("two other classes");
            tokens[slot] = opinion_words(p).choose(rng).expect("opinions").to_string();
        }
    }
    Sentence::new(id, tokens, aspect, aspect + 1, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("I love the screen,"), toks(&["i", "love", "the", "screen"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("  a  b "), toks(&["a", "b"]));
        assert_eq!(tokenize("\"Well\" -- it's fine!"), toks(&["well", "it's", "fine"]));
    }

    #[test]
    fn loads_tsv_and_json_records() {
        let data = "# header\n\
                    r1\ti love the screen\t11\t17\tpositive\n\
                    {\"id\":\"r2\",\"text\":\"The battery life, sadly.\",\"from\":4,\"to\":16,\"polarity\":\"negative\"}\n";
        let c = Corpus::read(data.as_bytes(), "mem", Split::Train).unwrap();
        assert_eq!(c.len(), 2);
        let s = &c.sentences[0];
        assert_eq!(s.tokens, toks(&["i", "love", "the", "screen"]));
        assert_eq!((s.aspect_from, s.aspect_to), (3, 4));
        assert_eq!(s.polarity.index(), 0);
        let s = &c.sentences[1];
        assert_eq!((s.aspect_from, s.aspect_to), (1, 3));
        assert_eq!(s.polarity, Polarity::Negative);
    }

    #[test]
    fn rejects_bad_records_with_line_numbers() {
        let err = Corpus::read("a\tx y\t0\t1\tmixed\n".as_bytes(), "d.tsv", Split::Train).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("d.tsv:1:") && msg.contains("mixed"), "{msg}");

        let err = Corpus::read("\na\tx y\t0\t9\tneutral\n".as_bytes(), "d.tsv", Split::Train).unwrap_err();
        assert!(err.to_string().starts_with("d.tsv:2:"), "{err}");

        let err = Corpus::read("a\tx , y\t2\t3\tneutral\n".as_bytes(), "d.tsv", Split::Train).unwrap_err();
        assert!(err.to_string().contains("cover no token"), "{err}");

        let dup = "a\tx\t0\t1\tneutral\na\ty\t0\t1\tneutral\n";
        assert!(Corpus::read(dup.as_bytes(), "d", Split::Train).is_err());
        assert!(Corpus::read("a\tb\t0\n".as_bytes(), "d", Split::Train).is_err());
    }

    #[test]
    fn empty_file_is_an_empty_corpus() {
        let c = Corpus::read("".as_bytes(), "e", Split::Test).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn save_load_round_trip() {
        let (train, _) = generate_synthetic(&SynthConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("train.tsv");
        train.save(&p).unwrap();
        assert_eq!(Corpus::load(&p, Split::Train).unwrap(), train);
    }

    #[test]
    fn synthetic_is_deterministic_balanced_and_disjoint() {
        let cfg = SynthConfig {
            train_size: 300,
            test_size: 150,
            max_len: 8,
            seed: 4,
        };
        let (a, b) = generate_synthetic(&cfg).unwrap();
        let (a2, b2) = generate_synthetic(&cfg).unwrap();
        assert_eq!((&a, &b), (&a2, &b2));
        assert_eq!(a.class_histogram(), [100, 100, 100]);
        assert_eq!(b.class_histogram(), [50, 50, 50]);
        let ids: HashSet<_> = a.sentences.iter().map(|s| &s.id).collect();
        assert!(b.sentences.iter().all(|s| !ids.contains(&s.id)));
        assert!(a.sentences.iter().all(|s| s.len() <= 8));
    }

    #[test]
    fn synthetic_labels_follow_the_oracle() {
        let (train, test) = generate_synthetic(&SynthConfig::default()).unwrap();
        for s in train.sentences.iter().chain(&test.sentences) {
            assert_eq!(oracle_label(s), Some(s.polarity), "{:?}", s);
        }
    }

    #[test]
    fn synthetic_validation() {
        let bad = SynthConfig {
            train_size: 10,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SynthConfig {
            max_len: 4,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }
}
