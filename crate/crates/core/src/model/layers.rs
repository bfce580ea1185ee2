//! Building blocks: LSTM cells, bidirectional encoders, user vector,
//! bilinear attention and the gated personality memory.

use crate::autodiff::{ParamId, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One LSTM cell. Gate rows are ordered input, forget, candidate, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmCell {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Stacked bidirectional LSTM; each layer is a (forward, backward) pair.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub layers: Vec<(LstmCell, LstmCell)>,
}

impl BiLstm {
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |(f, _)| 2 * f.hidden)
    }
}

fn expect_len(tape: &Tape, v: Var, len: usize, op: &'static str) -> Result<()> {
    let t = tape.value(v);
    if t.is_vector() && t.len() == len {
        Ok(())
    } else {
        Err(Error::dim(op, t.shape(), &[len]))
    }
}

/// `(h, c)` after one step:
/// `i, f, o = σ(·)`, `g = tanh(·)`, `c = f⊗c_prev + i⊗g`, `h = o⊗tanh(c)`.
pub fn lstm_step(tape: &mut Tape, cell: &LstmCell, x: Var, h_prev: Var, c_prev: Var) -> Result<(Var, Var)> {
    expect_len(tape, x, cell.input, "lstm_step input")?;
    expect_len(tape, h_prev, cell.hidden, "lstm_step hidden")?;
    expect_len(tape, c_prev, cell.hidden, "lstm_step cell")?;
    let h = cell.hidden;
    let (w_ih, w_hh, b) = (tape.param(cell.w_ih), tape.param(cell.w_hh), tape.param(cell.b));
    let xi = tape.matvec(w_ih, x)?;
    let hh = tape.matvec(w_hh, h_prev)?;
    let pre = tape.add(xi, hh)?;
    let pre = tape.add(pre, b)?;
    let i_pre = tape.slice(pre, 0, h)?;
    let f_pre = tape.slice(pre, h, h)?;
    let g_pre = tape.slice(pre, 2 * h, h)?;
    let o_pre = tape.slice(pre, 3 * h, h)?;
    let i = tape.sigmoid(i_pre)?;
    let f = tape.sigmoid(f_pre)?;
    let g = tape.tanh(g_pre)?;
    let o = tape.sigmoid(o_pre)?;
    let keep = tape.hadamard(f, c_prev)?;
    let write = tape.hadamard(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c)?;
    let h_new = tape.hadamard(o, tc)?;
    Ok((h_new, c))
}

fn run_direction(tape: &mut Tape, cell: &LstmCell, inputs: &[Var], reverse: bool) -> Result<Vec<Var>> {
    let mut h = tape.input(Tensor::zeros(&[cell.hidden]))?;
    let mut c = h;
    let mut out = vec![h; inputs.len()];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..inputs.len()).rev())
    } else {
        Box::new(0..inputs.len())
    };
    for t in order {
        (h, c) = lstm_step(tape, cell, inputs[t], h, c)?;
        out[t] = h;
    }
    Ok(out)
}

/// Per-position `[h_fwd; h_bwd]` of the top layer; layer ℓ+1 reads layer ℓ's outputs.
pub fn bilstm_encode(tape: &mut Tape, encoder: &BiLstm, inputs: &[Var]) -> Result<Vec<Var>> {
    if inputs.is_empty() {
        return Err(Error::Domain("cannot encode an empty sequence".into()));
    }
    let mut current = inputs.to_vec();
    for (fwd, bwd) in &encoder.layers {
        let f = run_direction(tape, fwd, &current, false)?;
        let b = run_direction(tape, bwd, &current, true)?;
        current = f
            .into_iter()
            .zip(b)
            .map(|(hf, hb)| tape.concat(&[hf, hb]))
            .collect::<Result<_>>()?;
    }
    Ok(current)
}

/// `v_u = tanh(W F + b)`.
pub fn user_embed(tape: &mut Tape, w: ParamId, b: ParamId, features: Var) -> Result<Var> {
    let (wv, bv) = (tape.param(w), tape.param(b));
    let lin = tape.matvec(wv, features)?;
    let lin = tape.add(lin, bv)?;
    tape.tanh(lin)
}

/// Context vector and weights of one attention read.
#[derive(Clone, Copy, Debug)]
pub struct AttentionResult {
    pub context: Var,
    pub weights: Var,
}

/// Bilinear attention: `e_j = qᵀ W h_j`, `α = softmax(e)`, `c = Σ α_j h_j`.
///
/// `states` is the `[n × d]` matrix of source states, `w` is `[|q| × d]`.
pub fn attention_context(tape: &mut Tape, query: Var, states: Var, w: Var) -> Result<AttentionResult> {
    let projected = tape.matvec_t(w, query)?;
    let scores = tape.matvec(states, projected)?;
    let weights = tape.softmax(scores)?;
    let context = tape.matvec_t(states, weights)?;
    Ok(AttentionResult { context, weights })
}

/// Outputs of one gated-memory step.
#[derive(Clone, Copy, Debug)]
pub struct MemoryStep {
    /// Decayed personality state `M_t`.
    pub memory: Var,
    /// Gated read `M_t^o` fed to the decoder.
    pub output: Var,
    pub update_gate: Var,
    pub read_gate: Var,
}

/// `g_u = σ(W_u q)`, `M_t = g_u ⊗ M_{t−1}`, `g_o = σ(W_o r)`, `M_t^o = g_o ⊗ M_t`.
///
/// `update_query` drives the decay gate; `read_input` is
/// `[s_{t−1}; e(y_{t−1}); c^X_t]` for the output gate.
pub fn gated_memory_step(
    tape: &mut Tape,
    update_w: Var,
    read_w: Var,
    update_query: Var,
    read_input: Var,
    memory_prev: Var,
) -> Result<MemoryStep> {
    let u = tape.matvec(update_w, update_query)?;
    let update_gate = tape.sigmoid(u)?;
    let memory = tape.hadamard(update_gate, memory_prev)?;
    let r = tape.matvec(read_w, read_input)?;
    let read_gate = tape.sigmoid(r)?;
    let output = tape.hadamard(read_gate, memory)?;
    Ok(MemoryStep {
        memory,
        output,
        update_gate,
        read_gate,
    })
}
