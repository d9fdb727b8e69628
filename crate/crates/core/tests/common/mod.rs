//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the library's estimators, forward
//! pass or metrics; it only reads model parameters.

#![allow(dead_code, clippy::needless_range_loop)]

use posce_core::corpus::{Polarity, Sentence};
use posce_core::textmodel::{ClassifierParams, Model};
use rand::Rng;

/// Payoffs indexed by coalition bitmask, uniform in [0, 1).
pub fn random_payoffs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..1usize << n).map(|_| rng.gen::<f64>()).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Average marginal contribution over every ordering of the players.
pub fn all_orderings_shapley(n: usize, payoff: impl Fn(u64) -> f64) -> Vec<f64> {
    let perms = permutations(n);
    let mut phi = vec![0.0; n];
    for perm in &perms {
        let mut mask = 0u64;
        let mut before = payoff(0);
        for &p in perm {
            mask |= 1 << p;
            let after = payoff(mask);
            phi[p] += after - before;
            before = after;
        }
    }
    phi.iter().map(|v| v / perms.len() as f64).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Weighted subset sum with weights |S|! (n-|S|-1)! / n!, in plain floats.
pub fn subset_sum_shapley(n: usize, payoff: impl Fn(u64) -> f64) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    for i in 0..n {
        for s in 0..1u64 << n {
            if s & (1 << i) != 0 {
                continue;
            }
            let k = s.count_ones() as usize;
            let w = factorial(k) * factorial(n - k - 1) / factorial(n);
            phi[i] += w * (payoff(s | 1 << i) - payoff(s));
        }
    }
    phi
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sinusoidal encoding written out from its definition.
pub fn sinusoid(pos: usize, j: usize, dim: usize) -> f64 {
    let pair = (j / 2) as f64;
    let angle = pos as f64 / 10000f64.powf(2.0 * pair / dim as f64);
    if j.is_multiple_of(2) {
        angle.sin()
    } else {
        angle.cos()
    }
}

/// Input rows as nested vectors: token + position + profile * direction.
pub fn plain_input(token_rows: &[Vec<f64>], profile: &[f64], direction: &[f64]) -> Vec<Vec<f64>> {
    let dim = direction.len();
    token_rows
        .iter()
        .enumerate()
        .map(|(p, row)| {
            (0..dim)
                .map(|j| row[j] + sinusoid(p, j, dim) + profile[p] * direction[j])
                .collect()
        })
        .collect()
}

/// Loop-based forward pass returning class probabilities.
pub fn plain_probs(params: &ClassifierParams, f: &[Vec<f64>]) -> [f64; 3] {
    let (k, h) = (params.m.nrows(), params.m.ncols());
    let mut pooled = vec![0.0; h];
    for row in f {
        for c in 0..h {
            let mut z = params.b[c];
            for j in 0..k {
                z += row[j] * params.m[[j, c]];
            }
            pooled[c] += z.tanh() / f.len() as f64;
        }
    }
    let mut logits = [0.0; 3];
    for (o, l) in logits.iter_mut().enumerate() {
        *l = params.b_out[o] + (0..h).map(|c| pooled[c] * params.w_out[[c, o]]).sum::<f64>();
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = e.iter().sum();
    [e[0] / z, e[1] / z, e[2] / z]
}

/// Cross-entropy with the 1e-12 floor plus L2 over M, W_out and u_posce.
pub fn plain_loss(params: &ClassifierParams, f_tokens: &[Vec<f64>], profile: &[f64], label: usize, l2: f64) -> f64 {
    let f = plain_input(f_tokens, profile, params.u_posce.as_slice().unwrap());
    let p = plain_probs(params, &f)[label];
    let norm: f64 = params
        .m
        .iter()
        .chain(params.w_out.iter())
        .chain(params.u_posce.iter())
        .map(|v| v * v)
        .sum();
    -p.max(1e-12).ln() + l2 * norm
}

pub fn token_rows(model: &Model, tokens: &[&str]) -> Vec<Vec<f64>> {
    let ids = model.embeddings.ids(tokens);
    ids.iter().map(|&i| model.embeddings.matrix().row(i).to_vec()).collect()
}

/// Probabilities for a phrase under a zero PosCE profile.
pub fn plain_phrase_probs(model: &Model, tokens: &[&str]) -> [f64; 3] {
    let rows = token_rows(model, tokens);
    let f = plain_input(
        &rows,
        &vec![0.0; tokens.len()],
        model.params.u_posce.as_slice().unwrap(),
    );
    plain_probs(&model.params, &f)
}

/// Context subsets of a sentence with the aspect kept, as word lists, in
/// bitmask order over the context positions.
pub fn phrases<'a>(tokens: &[&'a str], aspect_from: usize, aspect_to: usize) -> (Vec<usize>, Vec<Vec<&'a str>>) {
    let context: Vec<usize> = (0..tokens.len())
        .filter(|&i| i < aspect_from || i >= aspect_to)
        .collect();
    let all = (0..1u64 << context.len())
        .map(|mask| {
            (0..tokens.len())
                .filter(|&i| {
                    (aspect_from..aspect_to).contains(&i)
                        || context
                            .iter()
                            .position(|&c| c == i)
                            .is_some_and(|b| mask & (1 << b) != 0)
                })
                .map(|i| tokens[i])
                .collect()
        })
        .collect();
    (context, all)
}

/// Step-by-step table construction for sentences no longer than `max_len`:
/// enumerate phrases, score the true class, weight marginal contributions,
/// scatter into positions, average per aspect position, softmax.
pub fn plain_table(model: &Model, sentences: &[Sentence], max_len: usize) -> Vec<Option<Vec<f64>>> {
    let mut sums = vec![vec![0.0; max_len]; max_len];
    let mut counts = vec![0usize; max_len];
    for s in sentences {
        assert!(s.tokens.len() <= max_len);
        let tokens: Vec<&str> = s.tokens.iter().map(String::as_str).collect();
        let (context, phrase_list) = phrases(&tokens, s.aspect_from, s.aspect_to);
        let label = s.polarity.index();
        let payoffs: Vec<f64> = phrase_list
            .iter()
            .map(|p| plain_phrase_probs(model, p)[label])
            .collect();
        let phi = subset_sum_shapley(context.len(), |m| payoffs[m as usize]);
        let t = s.aspect_from;
        counts[t] += 1;
        for (b, &pos) in context.iter().enumerate() {
            sums[t][pos] += phi[b];
        }
    }
    (0..max_len)
        .map(|t| {
            (counts[t] > 0).then(|| {
                let mean: Vec<f64> = sums[t].iter().map(|v| v / counts[t] as f64).collect();
                let e: Vec<f64> = mean.iter().map(|v| v.exp()).collect();
                let z: f64 = e.iter().sum();
                e.iter().map(|v| v / z).collect()
            })
        })
        .collect()
}

/// Accuracy and macro-F1 counted by hand; empty-denominator ratios are zero.
pub fn plain_metrics(pairs: &[(Polarity, Polarity)]) -> (f64, f64) {
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    let mut f1_total = 0.0;
    for c in Polarity::ALL {
        let tp = pairs.iter().filter(|(t, p)| *t == c && *p == c).count() as f64;
        let predicted = pairs.iter().filter(|(_, p)| *p == c).count() as f64;
        let actual = pairs.iter().filter(|(t, _)| *t == c).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        f1_total += if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    (correct as f64 / pairs.len() as f64, f1_total / 3.0)
}
