//! Greedy and beam-search generation.
//!
//! Search is written against [`StepScorer`], which yields next-token
//! log-probabilities for a prefix. [`ModelScorer`] adapts a [`Model`]; tests
//! plug in hand-built distributions.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::data::{EncodedUser, BOS, EOS, PAD, UNK};
use crate::error::{Error, Result};
use crate::model::{DecoderState, Encoded, Model};
use crate::tensor::log_softmax;

/// Source of next-token log-probabilities.
pub trait StepScorer {
    type State: Clone;

    /// State before the first token.
    fn start(&mut self) -> Result<Self::State>;

    /// Log-probabilities of the next token after feeding `prev` (BOS on the
    /// first step). Impossible tokens carry `-inf`.
    fn step(&mut self, state: &Self::State, prev: usize) -> Result<(Vec<f64>, Self::State)>;
}

/// Tokens that decoding never emits: padding, unknown and BOS.
pub const MASKED_TOKENS: [usize; 3] = [PAD, UNK, BOS];

/// Adapts a model for search over one (blog, user) input.
pub struct ModelScorer<'m> {
    model: &'m Model,
    tape: Tape<'m>,
    encoded: Encoded,
    initial: DecoderState,
}

impl<'m> ModelScorer<'m> {
    pub fn new(model: &'m Model, blog: &[usize], user: &EncodedUser) -> Result<Self> {
        let mut tape = Tape::new(model.params());
        let (encoded, initial) = model.encode(&mut tape, blog, user)?;
        Ok(ModelScorer {
            model,
            tape,
            encoded,
            initial,
        })
    }
}

/// Masks [`MASKED_TOKENS`] and normalizes.
pub fn masked_log_probs(logits: &[f64]) -> Vec<f64> {
    let mut l = logits.to_vec();
    for t in MASKED_TOKENS {
        if t < l.len() {
            l[t] = f64::NEG_INFINITY;
        }
    }
    log_softmax(&l)
}

impl StepScorer for ModelScorer<'_> {
    type State = DecoderState;

    fn start(&mut self) -> Result<DecoderState> {
        Ok(self.initial.clone())
    }

    fn step(&mut self, state: &DecoderState, prev: usize) -> Result<(Vec<f64>, DecoderState)> {
        let out = self.model.decoder_step(&mut self.tape, state, prev, &self.encoded)?;
        let lp = masked_log_probs(self.tape.value(out.logits).data());
        Ok((lp, out.state))
    }
}

/// A decoded token sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Token ids, without BOS; ends with EOS when finished.
    pub tokens: Vec<usize>,
    /// Sum of step log-probabilities in nats.
    pub log_prob: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Ranking score: `log_prob / len^exponent` (raw log-prob when 0).
    pub fn score(&self, length_exponent: f64) -> f64 {
        if length_exponent == 0.0 || self.tokens.is_empty() {
            self.log_prob
        } else {
            self.log_prob / (self.tokens.len() as f64).powf(length_exponent)
        }
    }

    /// Tokens with a trailing EOS removed.
    pub fn content(&self) -> &[usize] {
        match self.tokens.split_last() {
            Some((&EOS, rest)) if self.finished => rest,
            _ => &self.tokens,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_len: usize,
    /// Length-normalization exponent; 0 disables it.
    pub length_exponent: f64,
    /// Stop once no live prefix can beat the worst pooled hypothesis.
    pub early_stop: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_size: 10,
            max_len: 20,
            length_exponent: 0.0,
            early_stop: true,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.max_len == 0 {
            return Err(Error::Config("beam size and max length must be at least 1".into()));
        }
        if self.length_exponent.is_nan() || self.length_exponent < 0.0 {
            return Err(Error::Config("length exponent must be non-negative".into()));
        }
        Ok(())
    }
}

/// Argmax decoding; ties go to the lowest token id.
pub fn greedy_decode<S: StepScorer>(scorer: &mut S, max_len: usize) -> Result<Hypothesis> {
    let mut state = scorer.start()?;
    let mut prev = BOS;
    let mut hyp = Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        finished: false,
    };
    while hyp.tokens.len() < max_len {
        let (lp, next) = scorer.step(&state, prev)?;
        let best = argmax(&lp);
        hyp.log_prob += lp[best];
        hyp.tokens.push(best);
        if best == EOS {
            hyp.finished = true;
            break;
        }
        state = next;
        prev = best;
    }
    Ok(hyp)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Descending score, then ascending token sequence.
fn rank(a: &Hypothesis, b: &Hypothesis, exponent: f64) -> Ordering {
    b.score(exponent)
        .total_cmp(&a.score(exponent))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

struct Live<St> {
    hyp: Hypothesis,
    state: St,
}

/// Beam search returning at most `beam_size` hypotheses, best first.
///
/// Each step expands every live prefix, keeps the top `beam_size` candidates by
/// cumulative log-probability (ties in token order), and moves the finished
/// ones into a pool capped at `beam_size`. The pool is padded with the best
/// unfinished prefixes left at `max_len`.
pub fn beam_search<S: StepScorer>(scorer: &mut S, cfg: &DecodeConfig) -> Result<Vec<Hypothesis>> {
    cfg.validate()?;
    let width = cfg.beam_size;
    let exponent = cfg.length_exponent;
    let mut live = vec![Live {
        hyp: Hypothesis {
            tokens: Vec::new(),
            log_prob: 0.0,
            finished: false,
        },
        state: scorer.start()?,
    }];
    let mut pool: Vec<Hypothesis> = Vec::new();

    for _ in 0..cfg.max_len {
        let mut candidates: Vec<(Hypothesis, usize)> = Vec::new();
        let mut next_states = Vec::with_capacity(live.len());
        for (parent, item) in live.iter().enumerate() {
            let prev = item.hyp.tokens.last().copied().unwrap_or(BOS);
            let (lp, next) = scorer.step(&item.state, prev)?;
            next_states.push(next);
            for (tok, &p) in lp.iter().enumerate() {
                if p == f64::NEG_INFINITY {
                    continue;
                }
                let mut tokens = item.hyp.tokens.clone();
                tokens.push(tok);
                candidates.push((
                    Hypothesis {
                        tokens,
                        log_prob: item.hyp.log_prob + p,
                        finished: tok == EOS,
                    },
                    parent,
                ));
            }
        }
        candidates.sort_by(|a, b| rank(&a.0, &b.0, 0.0));
        candidates.truncate(width);

        live = candidates
            .into_iter()
            .filter_map(|(hyp, parent)| {
                if hyp.finished {
                    pool.push(hyp);
                    None
                } else {
                    Some(Live {
                        hyp,
                        state: next_states[parent].clone(),
                    })
                }
            })
            .collect();
        pool.sort_by(|a, b| rank(a, b, exponent));
        pool.truncate(width);

        if live.is_empty() {
            break;
        }
        if cfg.early_stop && exponent == 0.0 && pool.len() == width {
            let best_live = live
                .iter()
                .map(|l| l.hyp.log_prob)
                .fold(f64::NEG_INFINITY, f64::max);
            let worst_pool = pool.last().map_or(f64::NEG_INFINITY, |h| h.log_prob);
            // Extensions only lower the log-probability.
            if best_live < worst_pool {
                break;
            }
        }
    }

    if pool.len() < width {
        let mut rest: Vec<Hypothesis> = live.into_iter().map(|l| l.hyp).collect();
        rest.sort_by(|a, b| rank(a, b, exponent));
        pool.extend(rest.into_iter().take(width - pool.len()));
    }
    pool.sort_by(|a, b| rank(a, b, exponent));
    Ok(pool)
}

/// Teacher-forced log-probability of `tokens` under the decoding mask.
pub fn rescore<S: StepScorer>(scorer: &mut S, tokens: &[usize]) -> Result<f64> {
    let mut state = scorer.start()?;
    let mut prev = BOS;
    let mut total = 0.0;
    for &t in tokens {
        let (lp, next) = scorer.step(&state, prev)?;
        total += lp[t];
        state = next;
        prev = t;
    }
    Ok(total)
}

/// Greedy decoding of a model for one blog and user.
pub fn greedy(model: &Model, blog: &[usize], user: &EncodedUser, max_len: usize) -> Result<Hypothesis> {
    greedy_decode(&mut ModelScorer::new(model, blog, user)?, max_len)
}

/// Beam search over a model for one blog and user.
pub fn beam(model: &Model, blog: &[usize], user: &EncodedUser, cfg: &DecodeConfig) -> Result<Vec<Hypothesis>> {
    beam_search(&mut ModelScorer::new(model, blog, user)?, cfg)
}
