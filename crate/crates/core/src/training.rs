//! Teacher-forced maximum-likelihood training with plain SGD.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{GradientSet, ParamStore, Tape, Var};
use crate::data::{EncodedExample, EncodedUser};
use crate::error::{Error, Result};
use crate::model::Model;

/// SGD settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Global L2 norm threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl OptimizerConfig {
    /// Full-scale settings: lr 0.001, batch 128.
    pub fn full_scale() -> Self {
        OptimizerConfig {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 10,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }

    /// Settings that converge on small synthetic corpora.
    pub fn desk() -> Self {
        OptimizerConfig {
            learning_rate: 1.0,
            batch_size: 4,
            epochs: 400,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::Config(format!("clip norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

fn user_of(example: &EncodedExample) -> EncodedUser {
    EncodedUser {
        features: example.features.clone(),
        description: example.description.clone(),
    }
}

fn check_ids(model: &Model, example: &EncodedExample) -> Result<()> {
    let v = model.vocab_size();
    if example.comment.len() < 2 {
        return Err(Error::Data("comment must be framed with BOS and EOS".into()));
    }
    let all = example
        .blog
        .iter()
        .chain(&example.comment)
        .chain(&example.description);
    if let Some(&bad) = all.into_iter().find(|&&id| id >= v) {
        return Err(Error::Index {
            op: "sequence_loss",
            index: bad,
            len: v,
        });
    }
    Ok(())
}

/// Per-token negative log-likelihood nodes `−log p(y_t | y_<t, X, U)` for
/// every target after BOS, EOS included.
pub fn token_loss_nodes(tape: &mut Tape, model: &Model, example: &EncodedExample) -> Result<Vec<Var>> {
    check_ids(model, example)?;
    let (enc, mut state) = model.encode(tape, &example.blog, &user_of(example))?;
    let mut out = Vec::with_capacity(example.target_len());
    for pair in example.comment.windows(2) {
        let step = model.decoder_step(tape, &state, pair[0], &enc)?;
        out.push(tape.nll(step.logits, pair[1])?);
        state = step.state;
    }
    Ok(out)
}

/// Summed sequence loss in nats as a tape node.
pub fn sequence_loss_node(tape: &mut Tape, model: &Model, example: &EncodedExample) -> Result<Var> {
    let nodes = token_loss_nodes(tape, model, example)?;
    tape.add_scalars(&nodes)
}

/// `L = −Σ_t log p(y*_t | y*_<t, X, U)` in nats.
pub fn sequence_loss(model: &Model, example: &EncodedExample) -> Result<f64> {
    let mut tape = Tape::new(model.params());
    let node = sequence_loss_node(&mut tape, model, example)?;
    Ok(tape.scalar(node))
}

/// Per-position losses, aligned with `example.comment[1..]`.
pub fn token_losses(model: &Model, example: &EncodedExample) -> Result<Vec<f64>> {
    let mut tape = Tape::new(model.params());
    let nodes = token_loss_nodes(&mut tape, model, example)?;
    Ok(nodes.iter().map(|&n| tape.scalar(n)).collect())
}

/// Sequence loss and its gradient with respect to every parameter.
pub fn loss_and_gradients(model: &Model, example: &EncodedExample) -> Result<(f64, GradientSet)> {
    let mut tape = Tape::new(model.params());
    let node = sequence_loss_node(&mut tape, model, example)?;
    let loss = tape.scalar(node);
    if !loss.is_finite() {
        return Err(Error::NonFinite { op: "sequence_loss" });
    }
    Ok((loss, tape.backward(node)?))
}

/// Total loss and target-token count over a dataset, teacher-forced.
pub fn corpus_loss(model: &Model, data: &[EncodedExample]) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut tokens = 0;
    for ex in data {
        total += sequence_loss(model, ex)?;
        tokens += ex.target_len();
    }
    Ok((total, tokens))
}

/// Applies `θ ← θ − lr·g` after rescaling `g` to `clip_norm` when its global
/// norm exceeds it. Returns the pre-clip norm.
pub fn sgd_update(params: &mut ParamStore, grads: &GradientSet, lr: f64, clip_norm: Option<f64>) -> Result<f64> {
    if grads.len() != params.len() {
        return Err(Error::dim("sgd_update", &[params.len()], &[grads.len()]));
    }
    for (id, g) in grads.iter() {
        if g.shape() != params.get(id).shape() {
            return Err(Error::dim("sgd_update", params.get(id).shape(), g.shape()));
        }
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite { op: "sgd_update" });
    }
    let norm = grads.global_norm();
    let factor = match clip_norm {
        Some(c) if norm > c => c / norm,
        _ => 1.0,
    };
    for (id, g) in grads.iter() {
        params.get_mut(id).axpy(-lr * factor, g);
    }
    Ok(norm)
}

/// Per-epoch training summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Loss per target token, accumulated before each batch's update.
    pub mean_loss: f64,
    pub tokens: usize,
    pub ppl: f64,
    pub seconds: f64,
}

impl EpochMetrics {
    /// Tab-separated log line: epoch, mean loss, perplexity, seconds.
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.3}",
            self.epoch, self.mean_loss, self.ppl, self.seconds
        )
    }
}

/// One pass over `data` in a seeded shuffled order; the final partial batch is
/// trained. Each batch step uses the per-token mean gradient of the batch.
pub fn train_epoch(model: &mut Model, data: &[EncodedExample], opt: &OptimizerConfig, epoch: usize) -> Result<EpochMetrics> {
    opt.validate()?;
    if data.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let start = Instant::now();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed.wrapping_add(epoch as u64));
    order.shuffle(&mut rng);

    let mut total_loss = 0.0;
    let mut total_tokens = 0usize;
    for (batch_idx, batch) in order.chunks(opt.batch_size).enumerate() {
        let mut grads = GradientSet::zeros_like(model.params());
        let mut batch_tokens = 0usize;
        for &i in batch {
            let (loss, g) = loss_and_gradients(model, &data[i]).map_err(|e| match e {
                Error::NonFinite { .. } => Error::Diverged {
                    what: "loss",
                    epoch,
                    batch: batch_idx,
                },
                other => other,
            })?;
            grads.accumulate(&g)?;
            total_loss += loss;
            batch_tokens += data[i].target_len();
        }
        total_tokens += batch_tokens;
        grads.scale(1.0 / batch_tokens as f64);
        sgd_update(model.params_mut(), &grads, opt.learning_rate, opt.clip_norm).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Diverged {
                what: "gradient",
                epoch,
                batch: batch_idx,
            },
            other => other,
        })?;
    }
    let mean_loss = total_loss / total_tokens as f64;
    Ok(EpochMetrics {
        epoch,
        mean_loss,
        tokens: total_tokens,
        ppl: mean_loss.exp(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `opt.epochs` epochs, calling `on_epoch` after each.
pub fn train(
    model: &mut Model,
    data: &[EncodedExample],
    opt: &OptimizerConfig,
    mut on_epoch: impl FnMut(&Model, &EpochMetrics) -> Result<()>,
) -> Result<Vec<EpochMetrics>> {
    let mut history = Vec::with_capacity(opt.epochs);
    for epoch in 1..=opt.epochs {
        let m = train_epoch(model, data, opt, epoch)?;
        on_epoch(model, &m)?;
        history.push(m);
    }
    Ok(history)
}
