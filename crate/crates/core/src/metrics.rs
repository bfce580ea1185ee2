//! Corpus evaluation: perplexity, BLEU-2 and an exact-match METEOR.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::data::EncodedExample;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::training::corpus_loss;

/// One hypothesis with its single reference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair<T> {
    pub hypothesis: Vec<T>,
    pub reference: Vec<T>,
}

impl<T> EvalPair<T> {
    pub fn new(hypothesis: Vec<T>, reference: Vec<T>) -> Self {
        EvalPair {
            hypothesis,
            reference,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub ppl: f64,
    pub bleu2: f64,
    pub meteor: f64,
}

/// `exp(Σ loss / Σ target tokens)`, teacher-forced on the gold comments.
pub fn perplexity(model: &Model, data: &[EncodedExample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("perplexity of an empty dataset".into()));
    }
    let (loss, tokens) = corpus_loss(model, data)?;
    Ok((loss / tokens as f64).exp())
}

fn counts<T: Hash + Eq + Clone>(grams: impl Iterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for g in grams {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// `(clipped matches, total hypothesis n-grams)` for one pair.
fn clipped<T: Hash + Eq + Clone>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize) {
    if hyp.len() < n {
        return (0, 0);
    }
    let h = counts(hyp.windows(n).map(<[T]>::to_vec));
    let r = counts(reference.windows(n).map(<[T]>::to_vec));
    let matched = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, hyp.len() + 1 - n)
}

/// Corpus-level BLEU-2 without smoothing:
/// `BP · exp(½ ln p₁ + ½ ln p₂)` with `BP = min(1, exp(1 − r/c))` on summed lengths.
pub fn bleu2<T: Hash + Eq + Clone>(pairs: &[EvalPair<T>]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("BLEU of an empty corpus".into()));
    }
    let (mut m1, mut t1, mut m2, mut t2) = (0, 0, 0, 0);
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for p in pairs {
        let (a, b) = clipped(&p.hypothesis, &p.reference, 1);
        let (c, d) = clipped(&p.hypothesis, &p.reference, 2);
        m1 += a;
        t1 += b;
        m2 += c;
        t2 += d;
        hyp_len += p.hypothesis.len();
        ref_len += p.reference.len();
    }
    if m1 == 0 || m2 == 0 || hyp_len == 0 {
        return Ok(0.0);
    }
    let p1 = m1 as f64 / t1 as f64;
    let p2 = m2 as f64 / t2 as f64;
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(bp * (0.5 * p1.ln() + 0.5 * p2.ln()).exp())
}

/// Exact-match alignment: `(matches, chunks)`.
///
/// Hypothesis tokens are aligned left to right; each takes the unused
/// reference occurrence right after the previous alignment when possible,
/// otherwise the earliest unused one. This reaches the maximum match count.
pub fn align<T: Eq>(hyp: &[T], reference: &[T]) -> (usize, usize) {
    let mut used = vec![false; reference.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut last_ref: Option<usize> = None;
    for (i, tok) in hyp.iter().enumerate() {
        let follow = last_ref
            .map(|r| r + 1)
            .filter(|&r| r < reference.len() && !used[r] && reference[r] == *tok);
        let pick = follow.or_else(|| (0..reference.len()).find(|&r| !used[r] && reference[r] == *tok));
        if let Some(r) = pick {
            used[r] = true;
            pairs.push((i, r));
            last_ref = Some(r);
        } else {
            last_ref = None;
        }
    }
    let chunks = pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
        + usize::from(!pairs.is_empty());
    (pairs.len(), chunks)
}

/// METEOR with exact matches only, averaged over pairs:
/// `F = 10PR/(R+9P)`, `penalty = 0.5·(chunks/m)³`, score `F·(1 − penalty)`.
pub fn meteor_lite<T: Eq>(pairs: &[EvalPair<T>]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("METEOR of an empty corpus".into()));
    }
    let total: f64 = pairs
        .iter()
        .map(|p| meteor_pair(&p.hypothesis, &p.reference))
        .sum();
    Ok(total / pairs.len() as f64)
}

pub fn meteor_pair<T: Eq>(hyp: &[T], reference: &[T]) -> f64 {
    let (m, chunks) = align(hyp, reference);
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / hyp.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    f * (1.0 - penalty)
}
