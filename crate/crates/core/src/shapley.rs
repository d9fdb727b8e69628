//! Cooperative-game engine over a small set of players.
//!
//! A game assigns a real payoff to every coalition (subset of players). The
//! Shapley value of player `i` is the weighted sum of its marginal
//! contributions over all coalitions that exclude it:
//!
//! ```text
//! phi_i = sum_{S ⊆ N \ {i}} |S|! (n - |S| - 1)! / n! * (v(S ∪ {i}) - v(S))
//! ```
//!
//! Two estimators are provided. [`shapley_exact`] enumerates all `2^n`
//! coalitions (capped at [`EXACT_PLAYER_CAP`] players) and memoizes every
//! payoff; [`shapley_permutation`] averages marginal contributions over
//! seeded random orderings.

use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest player count accepted by exhaustive enumeration (about one million
/// payoff evaluations).
pub const EXACT_PLAYER_CAP: usize = 20;

/// Largest player count representable by [`Coalition`].
pub const MAX_PLAYERS: usize = 64;

/// A subset of players `{0, .., n-1}` stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u64) -> Self {
        Coalition(bits)
    }

    /// The grand coalition of `n` players.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "coalition supports at most {MAX_PLAYERS} players");
        if n == MAX_PLAYERS {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub fn from_players<I: IntoIterator<Item = usize>>(players: I) -> Self {
        players.into_iter().fold(Coalition::EMPTY, Coalition::with)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, player: usize) -> bool {
        player < MAX_PLAYERS && self.0 & (1u64 << player) != 0
    }

    #[must_use]
    pub fn with(self, player: usize) -> Self {
        Coalition(self.0 | (1u64 << player))
    }

    #[must_use]
    pub fn without(self, player: usize) -> Self {
        Coalition(self.0 & !(1u64 << player))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let next = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(next)
        })
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

/// A characteristic function over `player_count()` players.
///
/// Implementations must be total and deterministic: the same coalition always
/// yields the bit-identical payoff.
pub trait CoalitionGame {
    fn player_count(&self) -> usize;

    fn payoff(&self, coalition: Coalition) -> Result<f64>;
}

impl<G: CoalitionGame + ?Sized> CoalitionGame for &G {
    fn player_count(&self) -> usize {
        (**self).player_count()
    }

    fn payoff(&self, coalition: Coalition) -> Result<f64> {
        (**self).payoff(coalition)
    }
}

/// A game given by an explicit payoff for every coalition, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    players: usize,
    payoffs: Vec<f64>,
}

impl TableGame {
    pub fn new(players: usize, payoffs: Vec<f64>) -> Result<Self> {
        if players > EXACT_PLAYER_CAP {
            return Err(Error::CapExceeded {
                players,
                cap: EXACT_PLAYER_CAP,
            });
        }
        if payoffs.len() != 1usize << players {
            return Err(Error::Shape(format!(
                "{} payoffs given for {players} players, expected {}",
                payoffs.len(),
                1usize << players
            )));
        }
        Ok(TableGame { players, payoffs })
    }

    /// Tabulates any game (n ≤ cap).
    pub fn tabulate<G: CoalitionGame>(game: &G) -> Result<Self> {
        let payoffs = enumerate_coalitions(game.player_count())?
            .map(|c| game.payoff(c))
            .collect::<Result<Vec<_>>>()?;
        TableGame::new(game.player_count(), payoffs)
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }
}

impl CoalitionGame for TableGame {
    fn player_count(&self) -> usize {
        self.players
    }

    fn payoff(&self, coalition: Coalition) -> Result<f64> {
        self.payoffs
            .get(coalition.bits() as usize)
            .copied()
            .ok_or_else(|| Error::invalid("coalition", format!("{coalition:?} outside game")))
    }
}

/// Adapts a closure into a game.
pub struct FnGame<F> {
    players: usize,
    payoff: F,
}

impl<F> FnGame<F>
where
    F: Fn(Coalition) -> f64,
{
    pub fn new(players: usize, payoff: F) -> Self {
        FnGame { players, payoff }
    }
}

impl<F> CoalitionGame for FnGame<F>
where
    F: Fn(Coalition) -> f64,
{
    fn player_count(&self) -> usize {
        self.players
    }

    fn payoff(&self, coalition: Coalition) -> Result<f64> {
        Ok((self.payoff)(coalition))
    }
}

/// Pointwise sum of two games on the same players.
pub struct SumGame<A, B>(pub A, pub B);

impl<A: CoalitionGame, B: CoalitionGame> CoalitionGame for SumGame<A, B> {
    fn player_count(&self) -> usize {
        self.0.player_count()
    }

    fn payoff(&self, coalition: Coalition) -> Result<f64> {
        Ok(self.0.payoff(coalition)? + self.1.payoff(coalition)?)
    }
}

/// A game scaled by a constant factor.
pub struct ScaledGame<G>(pub f64, pub G);

impl<G: CoalitionGame> CoalitionGame for ScaledGame<G> {
    fn player_count(&self) -> usize {
        self.1.player_count()
    }

    fn payoff(&self, coalition: Coalition) -> Result<f64> {
        Ok(self.0 * self.1.payoff(coalition)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Permutation,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Exact => f.write_str("exact"),
            Method::Permutation => f.write_str("permutation"),
        }
    }
}

/// Per-player attributions together with the estimator that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyValues {
    pub values: Vec<f64>,
    pub method: Method,
    /// Number of sampled permutations; 0 for exact results.
    pub sample_count: u64,
    /// Generator seed; 0 for exact results.
    pub seed: u64,
}

impl ShapleyValues {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// The Shapley weight `(n - s - 1)! s! / n!` as an exact rational.
pub fn coalition_weight(n: usize, subset_size: usize) -> Result<Ratio<u128>> {
    if n == 0 || subset_size >= n {
        return Err(Error::invalid(
            "coalition weight",
            format!("need 0 <= subset size < n, got subset size {subset_size} with n = {n}"),
        ));
    }
    // 34! overflows u128; games are capped far below that.
    if n > 33 {
        return Err(Error::CapExceeded { players: n, cap: 33 });
    }
    let numer = factorial(n - subset_size - 1) * factorial(subset_size);
    Ok(Ratio::new(numer, factorial(n)))
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn ratio_to_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Iterator over all `2^n` coalitions in ascending bitmask order.
#[derive(Debug, Clone)]
pub struct Coalitions {
    next: u64,
    end: u64,
}

impl Iterator for Coalitions {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        if self.next >= self.end {
            return None;
        }
        let c = Coalition(self.next);
        self.next += 1;
        Some(c)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Coalitions {}

/// All subsets of `{0, .., n-1}`, the empty coalition first.
pub fn enumerate_coalitions(n: usize) -> Result<Coalitions> {
    check_cap(n)?;
    Ok(Coalitions {
        next: 0,
        end: 1u64 << n,
    })
}

/// Number of nonempty coalitions, `2^n - 1`.
pub fn nonempty_coalition_count(n: usize) -> Result<u64> {
    check_cap(n)?;
    Ok((1u64 << n) - 1)
}

fn check_cap(n: usize) -> Result<()> {
    if n > EXACT_PLAYER_CAP {
        Err(Error::CapExceeded {
            players: n,
            cap: EXACT_PLAYER_CAP,
        })
    } else {
        Ok(())
    }
}

/// `v(S ∪ {player}) - v(S)`.
pub fn marginal_contribution<G: CoalitionGame + ?Sized>(game: &G, subset: Coalition, player: usize) -> Result<f64> {
    if player >= game.player_count() {
        return Err(Error::invalid(
            "player",
            format!("index {player} out of range for {} players", game.player_count()),
        ));
    }
    if subset.contains(player) {
        return Err(Error::invalid(
            "marginal contribution",
            format!("player {player} already belongs to {subset:?}"),
        ));
    }
    Ok(game.payoff(subset.with(player))? - game.payoff(subset)?)
}

/// Exact Shapley values by enumerating every coalition.
///
/// Each payoff is evaluated exactly once. Weights are exact rationals
/// converted to `f64` only when multiplied with a marginal contribution.
pub fn shapley_exact<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyValues> {
    let n = game.player_count();
    let payoffs = enumerate_coalitions(n)?
        .map(|c| game.payoff(c))
        .collect::<Result<Vec<_>>>()?;

    let mut values = vec![0.0; n];
    if n == 0 {
        return Ok(ShapleyValues {
            values,
            method: Method::Exact,
            sample_count: 0,
            seed: 0,
        });
    }
    let weights = (0..n)
        .map(|s| coalition_weight(n, s).map(ratio_to_f64))
        .collect::<Result<Vec<_>>>()?;

    for (mask, &base) in payoffs.iter().enumerate() {
        let size = (mask as u64).count_ones() as usize;
        if size == n {
            continue;
        }
        let w = weights[size];
        for (i, value) in values.iter_mut().enumerate() {
            let bit = 1usize << i;
            if mask & bit == 0 {
                *value += w * (payoffs[mask | bit] - base);
            }
        }
    }

    Ok(ShapleyValues {
        values,
        method: Method::Exact,
        sample_count: 0,
        seed: 0,
    })
}

/// Monte Carlo estimate from `samples` seeded random player orderings.
///
/// Rerunning with the same game, sample count and seed is bit-identical.
pub fn shapley_permutation<G: CoalitionGame + ?Sized>(game: &G, samples: usize, seed: u64) -> Result<ShapleyValues> {
    if samples == 0 {
        return Err(Error::invalid("sample count", "need at least one permutation"));
    }
    let n = game.player_count();
    if n > MAX_PLAYERS {
        return Err(Error::CapExceeded {
            players: n,
            cap: MAX_PLAYERS,
        });
    }

    let mut cache: HashMap<Coalition, f64> = HashMap::new();
    let mut eval = |c: Coalition| -> Result<f64> {
        if let Some(&v) = cache.get(&c) {
            return Ok(v);
        }
        let v = game.payoff(c)?;
        cache.insert(c, v);
        Ok(v)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sums = vec![0.0; n];
    let empty = eval(Coalition::EMPTY)?;
    for _ in 0..samples {
        order.shuffle(&mut rng);
        let mut coalition = Coalition::EMPTY;
        let mut previous = empty;
        for &player in &order {
            coalition = coalition.with(player);
            let current = eval(coalition)?;
            sums[player] += current - previous;
            previous = current;
        }
    }

    let scale = samples as f64;
    Ok(ShapleyValues {
        values: sums.into_iter().map(|s| s / scale).collect(),
        method: Method::Permutation,
        sample_count: samples as u64,
        seed,
    })
}

/// Outcome of one axiom check: whether it held and the worst violation seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomCheck {
    pub passed: bool,
    pub worst_deviation: f64,
}

impl AxiomCheck {
    fn from_deviation(worst_deviation: f64, tolerance: f64) -> Self {
        AxiomCheck {
            passed: worst_deviation <= tolerance,
            worst_deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub efficiency: AxiomCheck,
    pub symmetry: AxiomCheck,
    pub dummy: AxiomCheck,
    /// Interchangeable player pairs found in the game.
    pub symmetric_pairs: Vec<(usize, usize)>,
    /// Players with zero marginal contribution everywhere.
    pub dummies: Vec<usize>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.efficiency.passed && self.symmetry.passed && self.dummy.passed
    }
}

/// Checks Efficiency, Symmetry and Dummy for `values` against `game`.
///
/// Additivity involves two games and is checked by the caller, for instance
/// with [`SumGame`] and [`ScaledGame`].
pub fn verify_axioms<G: CoalitionGame + ?Sized>(
    game: &G,
    values: &ShapleyValues,
    tolerance: f64,
) -> Result<AxiomReport> {
    let n = game.player_count();
    if values.values.len() != n {
        return Err(Error::Shape(format!(
            "{} values for a {n}-player game",
            values.values.len()
        )));
    }
    let payoffs = enumerate_coalitions(n)?
        .map(|c| game.payoff(c))
        .collect::<Result<Vec<_>>>()?;
    let full = payoffs[payoffs.len() - 1];
    let efficiency = AxiomCheck::from_deviation((values.sum() - (full - payoffs[0])).abs(), tolerance);

    let mut dummies = Vec::new();
    for i in 0..n {
        let bit = 1usize << i;
        let is_dummy = (0..payoffs.len())
            .filter(|m| m & bit == 0)
            .all(|m| (payoffs[m | bit] - payoffs[m]).abs() <= tolerance);
        if is_dummy {
            dummies.push(i);
        }
    }
    let dummy_dev = dummies.iter().map(|&i| values.values[i].abs()).fold(0.0, f64::max);

    let mut symmetric_pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (bi, bj) = (1usize << i, 1usize << j);
            let interchangeable = (0..payoffs.len())
                .filter(|m| m & (bi | bj) == 0)
                .all(|m| (payoffs[m | bi] - payoffs[m | bj]).abs() <= tolerance);
            if interchangeable {
                symmetric_pairs.push((i, j));
            }
        }
    }
    let symmetry_dev = symmetric_pairs
        .iter()
        .map(|&(i, j)| (values.values[i] - values.values[j]).abs())
        .fold(0.0, f64::max);

    Ok(AxiomReport {
        efficiency,
        symmetry: AxiomCheck::from_deviation(symmetry_dev, tolerance),
        dummy: AxiomCheck::from_deviation(dummy_dev, tolerance),
        symmetric_pairs,
        dummies,
    })
}
