//! Word-position games and the per-aspect-position contribution table.
//!
//! For a sentence with aspect at position `t`, the players are the context
//! positions. The payoff of a coalition is the classifier's probability for a
//! chosen class on the phrase that keeps the aspect span plus the coalition's
//! words, in their original order. Every other context word is deleted, so
//! the phrase is shorter and gets positional encodings for its own length.
//!
//! The table aggregates per-sentence Shapley vectors by the aspect's absolute
//! position: row `t` is the softmax of the mean (zero-padded) vector over all
//! sentences whose aspect sits at `t`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::container::{self, Tensor};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::shapley::{
    shapley_exact, shapley_permutation, Coalition, CoalitionGame, Method, ShapleyValues, EXACT_PLAYER_CAP, MAX_PLAYERS,
};
use crate::textmodel::{Model, NUM_CLASSES};

const TABLE_MAGIC: &[u8; 8] = b"POSCETBL";
pub const TABLE_VERSION: u32 = 1;

/// Which Shapley estimator to run for a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EstimatorConfig {
    Exact,
    Permutation {
        samples: usize,
        seed: u64,
    },
    /// Exact up to `exact_max_players` context words, sampled beyond, with a
    /// per-sentence seed derived from `seed` and the sentence id.
    Auto {
        exact_max_players: usize,
        samples: usize,
        seed: u64,
    },
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig::Auto {
            exact_max_players: 12,
            samples: 2000,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            EstimatorConfig::Exact => self,
            EstimatorConfig::Permutation { samples, .. } => EstimatorConfig::Permutation { samples, seed },
            EstimatorConfig::Auto {
                exact_max_players,
                samples,
                ..
            } => EstimatorConfig::Auto {
                exact_max_players,
                samples,
                seed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorConfig::Exact => Ok(()),
            EstimatorConfig::Permutation { samples: 0, .. } => {
                Err(Error::invalid("estimator", "permutation sampling needs samples >= 1"))
            }
            EstimatorConfig::Auto {
                exact_max_players,
                samples,
                ..
            } => {
                if samples == 0 {
                    Err(Error::invalid("estimator", "permutation sampling needs samples >= 1"))
                } else if exact_max_players > EXACT_PLAYER_CAP {
                    Err(Error::CapExceeded {
                        players: exact_max_players,
                        cap: EXACT_PLAYER_CAP,
                    })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn estimate<G: CoalitionGame>(&self, game: &G, sentence_id: &str) -> Result<ShapleyValues> {
        match *self {
            EstimatorConfig::Exact => shapley_exact(game),
            EstimatorConfig::Permutation { samples, seed } => shapley_permutation(game, samples, seed),
            EstimatorConfig::Auto {
                exact_max_players,
                samples,
                seed,
            } => {
                if game.player_count() <= exact_max_players {
                    shapley_exact(game)
                } else {
                    shapley_permutation(game, samples, sentence_seed(seed, sentence_id))
                }
            }
        }
    }
}

/// Mixes a global seed with a sentence id (FNV-1a then splitmix64).
pub fn sentence_seed(seed: u64, sentence_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in sentence_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A sentence cut to at most `max_len` tokens around its aspect.
///
/// Sentences that fit are kept whole. Longer ones keep the first `max_len`
/// tokens when the aspect starts inside them; otherwise the window ends at
/// the aspect's first token, which then sits at `max_len - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub tokens: Vec<String>,
    pub aspect_from: usize,
    pub aspect_to: usize,
}

impl Window {
    pub fn new(sentence: &Sentence, max_len: usize) -> Self {
        let n = sentence.len();
        let start = if n <= max_len || sentence.aspect_from < max_len {
            0
        } else {
            sentence.aspect_from + 1 - max_len
        };
        let end = (start + max_len).min(n);
        Window {
            tokens: sentence.tokens[start..end].to_vec(),
            aspect_from: sentence.aspect_from - start,
            aspect_to: sentence.aspect_to.min(end) - start,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn aspect_position(&self) -> usize {
        self.aspect_from
    }
}

/// What the game for one sentence pays out.
#[derive(Debug, Clone, Copy)]
pub struct AspectGameSpec<'a> {
    pub sentence: &'a Sentence,
    /// Ground-truth class index.
    pub label: usize,
    /// Class whose probability is the payoff; equal to `label` for the
    /// true-class payoff used in table building.
    pub payoff_class: usize,
}

impl<'a> AspectGameSpec<'a> {
    /// The true-class game for a labelled sentence.
    pub fn true_class(sentence: &'a Sentence) -> Self {
        let label = sentence.polarity.index();
        AspectGameSpec {
            sentence,
            label,
            payoff_class: label,
        }
    }

    pub fn aspect_position(&self) -> usize {
        self.sentence.aspect_position()
    }
}

/// The coalition game over one sentence's context positions.
pub struct SentenceGame<'m> {
    model: &'m Model,
    ids: Vec<usize>,
    tokens: Vec<String>,
    aspect_from: usize,
    aspect_to: usize,
    /// Window position of each player.
    context: Vec<usize>,
    payoff_class: usize,
}

impl<'m> SentenceGame<'m> {
    pub fn context_positions(&self) -> &[usize] {
        &self.context
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn aspect_position(&self) -> usize {
        self.aspect_from
    }

    fn phrase_positions(&self, coalition: Coalition) -> Vec<usize> {
        let mut keep = vec![false; self.ids.len()];
        keep[self.aspect_from..self.aspect_to]
            .iter_mut()
            .for_each(|k| *k = true);
        for player in coalition.members() {
            keep[self.context[player]] = true;
        }
        keep.iter().enumerate().filter_map(|(i, &k)| k.then_some(i)).collect()
    }

    /// The words of the phrase a coalition stands for.
    pub fn phrase(&self, coalition: Coalition) -> Vec<&str> {
        self.phrase_positions(coalition)
            .into_iter()
            .map(|i| self.tokens[i].as_str())
            .collect()
    }

    /// Class probabilities on the phrase for `coalition`, with a zero PosCE
    /// profile.
    pub fn probabilities(&self, coalition: Coalition) -> Result<[f64; NUM_CLASSES]> {
        let positions = self.phrase_positions(coalition);
        let aspect = positions
            .iter()
            .position(|&p| p == self.aspect_from)
            .expect("aspect is always kept");
        let ids: Vec<usize> = positions.iter().map(|&p| self.ids[p]).collect();
        self.model.predict(&ids, &vec![0.0; ids.len()], aspect)
    }
}

impl CoalitionGame for SentenceGame<'_> {
    fn player_count(&self) -> usize {
        self.context.len()
    }

    fn payoff(&self, coalition: Coalition) -> Result<f64> {
        Ok(self.probabilities(coalition)?[self.payoff_class])
    }
}

/// Builds the game for `spec` on the sentence's `max_len` window.
pub fn game_from_sentence<'m>(model: &'m Model, spec: &AspectGameSpec<'_>) -> Result<SentenceGame<'m>> {
    if spec.sentence.is_empty() {
        return Err(Error::invalid("sentence", "empty sentence has no game"));
    }
    if spec.payoff_class >= NUM_CLASSES || spec.label >= NUM_CLASSES {
        return Err(Error::invalid(
            "payoff class",
            format!("{} not in 0..3", spec.payoff_class),
        ));
    }
    let window = Window::new(spec.sentence, model.max_len);
    let context: Vec<usize> = (0..window.len())
        .filter(|&i| i < window.aspect_from || i >= window.aspect_to)
        .collect();
    if context.len() > MAX_PLAYERS {
        return Err(Error::CapExceeded {
            players: context.len(),
            cap: MAX_PLAYERS,
        });
    }
    Ok(SentenceGame {
        model,
        ids: model.embeddings.ids(&window.tokens),
        tokens: window.tokens,
        aspect_from: window.aspect_from,
        aspect_to: window.aspect_to,
        context,
        payoff_class: spec.payoff_class,
    })
}

/// Raw (pre-softmax) contribution vector for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceProfile {
    /// One entry per window position; aspect positions are exactly zero.
    pub values: Vec<f64>,
    pub aspect_position: usize,
    pub shapley: ShapleyValues,
}

pub fn sentence_profile(
    model: &Model,
    spec: &AspectGameSpec<'_>,
    estimator: &EstimatorConfig,
) -> Result<SentenceProfile> {
    let game = game_from_sentence(model, spec)?;
    let shapley = estimator.estimate(&game, &spec.sentence.id)?;
    let mut values = vec![0.0; game.len()];
    for (&pos, &v) in game.context_positions().iter().zip(&shapley.values) {
        values[pos] = v;
    }
    Ok(SentenceProfile {
        values,
        aspect_position: game.aspect_position(),
        shapley,
    })
}

/// Estimator provenance stored with a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildStats {
    pub sentences: usize,
    pub exact_games: usize,
    pub sampled_games: usize,
}

/// Per-aspect-position contribution profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct PosceTable {
    max_len: usize,
    /// Row-major `max_len x max_len`.
    profiles: Vec<f64>,
    counts: Vec<u64>,
    built_at_epoch: i64,
    estimator: Option<EstimatorConfig>,
    stats: BuildStats,
}

impl PosceTable {
    /// A table that was never built: every row uniform, every count zero.
    pub fn unbuilt(max_len: usize) -> Self {
        assert!(max_len > 0, "max_len must be positive");
        PosceTable {
            max_len,
            profiles: vec![1.0 / max_len as f64; max_len * max_len],
            counts: vec![0; max_len],
            built_at_epoch: -1,
            estimator: None,
            stats: BuildStats::default(),
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.profiles[t * self.max_len..(t + 1) * self.max_len]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn built_at_epoch(&self) -> i64 {
        self.built_at_epoch
    }

    pub fn is_built(&self) -> bool {
        self.built_at_epoch >= 0 || self.counts.iter().any(|&c| c > 0)
    }

    pub fn estimator(&self) -> Option<EstimatorConfig> {
        self.estimator
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn to_bytes(&self, config: &Value) -> Result<Vec<u8>> {
        let header = json!({
            "format": "posce-table",
            "max_len": self.max_len,
            "counts": self.counts,
            "built_at_epoch": self.built_at_epoch,
            "estimator": self.estimator,
            "stats": self.stats,
            "config": config,
        });
        let tensors = [Tensor::new(
            "profiles",
            vec![self.max_len, self.max_len],
            self.profiles.clone(),
        )];
        container::encode(TABLE_MAGIC, TABLE_VERSION, header, &tensors)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, Value)> {
        let mut d = container::decode(bytes, TABLE_MAGIC, TABLE_VERSION)?;
        let max_len: usize = d.field("max_len")?;
        let counts: Vec<u64> = d.field("counts")?;
        let table = PosceTable {
            max_len,
            counts,
            built_at_epoch: d.field("built_at_epoch")?,
            estimator: d.field("estimator")?,
            stats: d.field("stats")?,
            profiles: d.take("profiles")?.data,
        };
        if max_len == 0 || table.counts.len() != max_len || table.profiles.len() != max_len * max_len {
            return Err(Error::format("PosCE table", "inconsistent dimensions"));
        }
        let config = d.header.get("config").cloned().unwrap_or(Value::Null);
        Ok((table, config))
    }

    pub fn save(&self, path: &Path, config: &Value) -> Result<()> {
        container::write_file(path, &self.to_bytes(config)?)
    }

    pub fn load(path: &Path) -> Result<(Self, Value)> {
        PosceTable::from_bytes(&container::read_file(path)?)
    }

    /// Human-readable dump: one row per aspect position.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# posce table v{TABLE_VERSION}\tmax_len={}\tbuilt_at_epoch={}",
            self.max_len, self.built_at_epoch
        );
        out.push_str("aspect_position\tcount");
        for i in 0..self.max_len {
            let _ = write!(out, "\tp{i}");
        }
        out.push('\n');
        for t in 0..self.max_len {
            let _ = write!(out, "{t}\t{}", self.counts[t]);
            for v in self.row(t) {
                let _ = write!(out, "\t{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Builds the table from true-class games over `corpus`.
///
/// Sentences are processed in parallel on the current rayon pool; the
/// reduction runs in corpus order so the result does not depend on the
/// thread count.
pub fn build_table(
    model: &Model,
    corpus: &[Sentence],
    max_len: usize,
    estimator: &EstimatorConfig,
    epoch: i64,
) -> Result<PosceTable> {
    if corpus.is_empty() {
        return Err(Error::invalid(
            "corpus",
            "cannot build a PosCE table from an empty corpus",
        ));
    }
    if max_len == 0 {
        return Err(Error::invalid("max_len", "must be positive"));
    }
    estimator.validate()?;
    let profiles = corpus
        .par_iter()
        .map(|s| sentence_profile(model, &AspectGameSpec::true_class(s), estimator))
        .collect::<Result<Vec<_>>>()?;

    let mut sums = vec![0.0; max_len * max_len];
    let mut counts = vec![0u64; max_len];
    let mut stats = BuildStats {
        sentences: profiles.len(),
        ..BuildStats::default()
    };
    for p in &profiles {
        match p.shapley.method {
            Method::Exact => stats.exact_games += 1,
            Method::Permutation => stats.sampled_games += 1,
        }
        let t = p.aspect_position.min(max_len - 1);
        counts[t] += 1;
        for (acc, v) in sums[t * max_len..(t + 1) * max_len].iter_mut().zip(&p.values) {
            *acc += v;
        }
    }

    let mut table = PosceTable::unbuilt(max_len);
    for t in 0..max_len {
        if counts[t] == 0 {
            continue;
        }
        let mean: Vec<f64> = sums[t * max_len..(t + 1) * max_len]
            .iter()
            .map(|s| s / counts[t] as f64)
            .collect();
        table.profiles[t * max_len..(t + 1) * max_len].copy_from_slice(&softmax(&mean));
    }
    table.counts = counts;
    table.built_at_epoch = epoch;
    table.estimator = Some(*estimator);
    table.stats = stats;
    Ok(table)
}

/// The first `len` entries of row `min(t, max_len - 1)`, renormalized to sum
/// to one. Rows never built give the uniform `1 / len`.
pub fn lookup_profile(table: &PosceTable, t: usize, len: usize) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let uniform = || vec![1.0 / len as f64; len];
    let r = t.min(table.max_len - 1);
    if table.counts[r] == 0 {
        return uniform();
    }
    let row = table.row(r);
    let mut out: Vec<f64> = (0..len).map(|i| row.get(i).copied().unwrap_or(0.0)).collect();
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return uniform();
    }
    out.iter_mut().for_each(|v| *v /= total);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Polarity;
    use crate::shapley::{enumerate_coalitions, verify_axioms};
    use crate::textmodel::{ClassifierParams, EmbeddingTable};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sentence(id: &str, words: &str, t: usize, p: Polarity) -> Sentence {
        let tokens: Vec<String> = words.split(' ').map(String::from).collect();
        Sentence::new(id, tokens, t, t + 1, p).unwrap()
    }

    fn trained_like(max_len: usize, seed: u64) -> Model {
        let words = ["a", "b", "c", "d", "e", "f", "g"];
        let emb = EmbeddingTable::random(&words, 6, 1.0, seed).unwrap();
        let mut params = ClassifierParams::init(6, 5, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        params.w_out *= 4.0;
        Model::new(emb, params, max_len).unwrap()
    }

    fn constant_model() -> Model {
        let emb = EmbeddingTable::random(&["a", "b", "c"], 4, 1.0, 0).unwrap();
        Model::new(emb, ClassifierParams::zeros(4, 3), 6).unwrap()
    }

    #[test]
    fn three_word_sentence_yields_the_expected_phrases() {
        let model = trained_like(8, 1);
        let s = sentence("s", "a b c", 1, Polarity::Positive);
        let game = game_from_sentence(&model, &AspectGameSpec::true_class(&s)).unwrap();
        assert_eq!(game.player_count(), 2);
        let phrases: Vec<String> = enumerate_coalitions(2)
            .unwrap()
            .map(|c| game.phrase(c).join(" "))
            .collect();
        assert_eq!(phrases, vec!["b", "a b", "b c", "a b c"]);
    }

    #[test]
    fn aspect_only_sentence_has_no_players() {
        let model = trained_like(8, 2);
        let s = sentence("s", "d", 0, Polarity::Neutral);
        let game = game_from_sentence(&model, &AspectGameSpec::true_class(&s)).unwrap();
        assert_eq!(game.player_count(), 0);
        let direct = model.predict(&model.embeddings.ids(&s.tokens), &[0.0], 0).unwrap();
        assert_eq!(game.payoff(Coalition::EMPTY).unwrap(), direct[1]);
        let p = sentence_profile(&model, &AspectGameSpec::true_class(&s), &EstimatorConfig::Exact).unwrap();
        assert_eq!(p.values, vec![0.0]);
    }

    #[test]
    fn constant_model_gives_zero_profile_and_uniform_rows() {
        let model = constant_model();
        let s = sentence("s", "a b c a", 2, Polarity::Negative);
        let spec = AspectGameSpec::true_class(&s);
        let game = game_from_sentence(&model, &spec).unwrap();
        for c in enumerate_coalitions(3).unwrap() {
            assert_abs_diff_eq!(game.payoff(c).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        }
        let p = sentence_profile(&model, &spec, &EstimatorConfig::Exact).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));

        let table = build_table(&model, std::slice::from_ref(&s), 6, &EstimatorConfig::Exact, 0).unwrap();
        for t in 0..6 {
            for &v in table.row(t) {
                assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn two_token_profile_is_the_lone_marginal() {
        let model = trained_like(8, 3);
        let s = sentence("s", "e f", 0, Polarity::Positive);
        let spec = AspectGameSpec::true_class(&s);
        let game = game_from_sentence(&model, &spec).unwrap();
        let p = sentence_profile(&model, &spec, &EstimatorConfig::Exact).unwrap();
        let expected = game.payoff(Coalition::from_players([0])).unwrap() - game.payoff(Coalition::EMPTY).unwrap();
        assert_abs_diff_eq!(p.values[1], expected, epsilon = 1e-15);
        assert_eq!(p.values[0], 0.0);
    }

    #[test]
    fn profiles_are_efficient_and_exclude_the_aspect() {
        let model = trained_like(8, 4);
        let s = sentence("s", "a b c d e f", 3, Polarity::Negative);
        let spec = AspectGameSpec::true_class(&s);
        let game = game_from_sentence(&model, &spec).unwrap();
        let p = sentence_profile(&model, &spec, &EstimatorConfig::Exact).unwrap();
        assert_eq!(p.values[3], 0.0);
        let gap = game.payoff(Coalition::full(5)).unwrap() - game.payoff(Coalition::EMPTY).unwrap();
        assert_abs_diff_eq!(p.values.iter().sum::<f64>(), gap, epsilon = 1e-9);
        assert!(verify_axioms(&game, &p.shapley, 1e-9).unwrap().all_passed());
    }

    #[test]
    fn multi_token_aspect_is_one_block() {
        let model = trained_like(8, 5);
        let tokens: Vec<String> = "a b c d".split(' ').map(String::from).collect();
        let s = Sentence::new("m", tokens, 1, 3, Polarity::Positive).unwrap();
        let game = game_from_sentence(&model, &AspectGameSpec::true_class(&s)).unwrap();
        assert_eq!(game.context_positions(), &[0, 3]);
        assert_eq!(game.phrase(Coalition::EMPTY), vec!["b", "c"]);
        let p = sentence_profile(&model, &AspectGameSpec::true_class(&s), &EstimatorConfig::Exact).unwrap();
        assert_eq!((p.values[1], p.values[2]), (0.0, 0.0));
    }

    #[test]
    fn windows_keep_the_aspect() {
        let s = sentence("w", "a b c d e f g", 5, Polarity::Positive);
        let w = Window::new(&s, 4);
        assert_eq!(w.tokens, vec!["c", "d", "e", "f"]);
        assert_eq!(w.aspect_position(), 3);
        let s = sentence("w", "a b c d e f g", 1, Polarity::Positive);
        let w = Window::new(&s, 4);
        assert_eq!(w.tokens, vec!["a", "b", "c", "d"]);
        assert_eq!(w.aspect_position(), 1);
    }

    #[test]
    fn table_rows_and_fallbacks() {
        let model = trained_like(6, 6);
        let corpus = vec![
            sentence("1", "a b c d", 1, Polarity::Positive),
            sentence("2", "c d e", 1, Polarity::Negative),
            sentence("3", "f g a b c", 3, Polarity::Neutral),
        ];
        let table = build_table(&model, &corpus, 6, &EstimatorConfig::Exact, 2).unwrap();
        assert_eq!(table.counts(), &[0, 2, 0, 1, 0, 0]);
        assert_eq!(table.built_at_epoch(), 2);
        for t in 0..6 {
            let row = table.row(t);
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            if table.counts()[t] == 0 {
                assert!(row.iter().all(|&v| v == 1.0 / 6.0));
            }
        }
        let mut reversed = corpus.clone();
        reversed.reverse();
        let again = build_table(&model, &reversed, 6, &EstimatorConfig::Exact, 2).unwrap();
        for (a, b) in table.profiles.iter().zip(&again.profiles) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let doubled = vec![
            corpus[2].clone(),
            Sentence {
                id: "4".into(),
                ..corpus[2].clone()
            },
        ];
        let single = build_table(&model, &corpus[2..], 6, &EstimatorConfig::Exact, 2).unwrap();
        let twice = build_table(&model, &doubled, 6, &EstimatorConfig::Exact, 2).unwrap();
        for (a, b) in single.row(3).iter().zip(twice.row(3)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert!(build_table(&model, &[], 6, &EstimatorConfig::Exact, 0).is_err());
    }

    #[test]
    fn lookup_rules() {
        let unbuilt = PosceTable::unbuilt(5);
        assert_eq!(lookup_profile(&unbuilt, 2, 4), vec![0.25; 4]);
        assert_eq!(lookup_profile(&unbuilt, 9, 1), vec![1.0]);

        let model = trained_like(5, 7);
        let corpus = vec![sentence("1", "a b c d e", 4, Polarity::Positive)];
        let table = build_table(&model, &corpus, 5, &EstimatorConfig::Exact, 1).unwrap();
        let full = lookup_profile(&table, 4, 5);
        for (a, b) in full.iter().zip(table.row(4)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let clamped = lookup_profile(&table, 40, 3);
        assert_abs_diff_eq!(clamped.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            clamped[0] / clamped[1],
            table.row(4)[0] / table.row(4)[1],
            epsilon = 1e-12
        );
    }

    #[test]
    fn table_file_round_trip() {
        let model = trained_like(5, 8);
        let corpus = vec![sentence("1", "a b c", 1, Polarity::Positive)];
        let table = build_table(&model, &corpus, 5, &EstimatorConfig::default(), 3).unwrap();
        let cfg = json!({"seed": 1});
        let bytes = table.to_bytes(&cfg).unwrap();
        let (back, cfg_back) = PosceTable::from_bytes(&bytes).unwrap();
        assert_eq!(back, table);
        assert_eq!(cfg_back, cfg);
        assert_eq!(back.to_bytes(&cfg).unwrap(), bytes);
        let tsv = table.to_tsv();
        assert_eq!(tsv.lines().count(), 2 + 5);
    }

    #[test]
    fn auto_estimator_switches_to_sampling() {
        let model = trained_like(8, 9);
        let s = sentence("long", "a b c d e f g a", 0, Polarity::Positive);
        let est = EstimatorConfig::Auto {
            exact_max_players: 3,
            samples: 50,
            seed: 11,
        };
        let p = sentence_profile(&model, &AspectGameSpec::true_class(&s), &est).unwrap();
        assert_eq!(p.shapley.method, Method::Permutation);
        assert_eq!(p.shapley.seed, sentence_seed(11, "long"));
        let q = sentence_profile(&model, &AspectGameSpec::true_class(&s), &est).unwrap();
        assert_eq!(p, q);
    }
}
