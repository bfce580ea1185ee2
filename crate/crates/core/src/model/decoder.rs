use super::layers::{attention_context, bilstm_encode, gated_memory_step, lstm_step, user_embed};
use super::{Linear, Model};
use crate::autodiff::{Tape, Var};
use crate::data::EncodedUser;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Encoder outputs shared by every decoding step.
#[derive(Clone, Debug)]
pub struct Encoded {
    /// `[n × 2H]` blog states.
    pub blog_states: Var,
    /// `[l × 2H_d]` description states, with co-attention.
    pub desc_states: Option<Var>,
    /// User vector `v_u`, when the variant uses one.
    pub user_vector: Option<Var>,
}

/// Recurrent decoder state.
#[derive(Clone, Debug)]
pub struct DecoderState {
    /// `(h, c)` per decoder layer, bottom first.
    pub layers: Vec<(Var, Var)>,
    /// Personality state `M_t`, with gated memory.
    pub memory: Option<Var>,
    pub step: usize,
}

impl DecoderState {
    /// Top-layer hidden state `s_t`.
    pub fn top(&self) -> Var {
        self.layers.last().expect("decoder has at least one layer").0
    }
}

/// Result of one decoding step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub logits: Var,
    pub state: DecoderState,
    pub blog_attention: Var,
    pub desc_attention: Option<Var>,
    /// Decay gate `g_u` applied at this step.
    pub memory_gate: Option<Var>,
}

fn linear(tape: &mut Tape, l: &Linear, x: Var) -> Result<Var> {
    let w = tape.param(l.w);
    let y = tape.matvec(w, x)?;
    match l.b {
        Some(b) => {
            let b = tape.param(b);
            tape.add(y, b)
        }
        None => Ok(y),
    }
}

impl Model {
    fn embed_all(&self, tape: &mut Tape, ids: &[usize]) -> Result<Vec<Var>> {
        let table = tape.param(self.layout.embedding);
        ids.iter().map(|&i| tape.embedding(table, i)).collect()
    }

    /// Runs the encoders and builds the initial decoder state.
    ///
    /// `s_0` of each decoder layer is `tanh(W [h_fwd(n); h_bwd(1)] + b)` over the
    /// blog encoder's top layer, cells start at zero and `M_0 = v_u`.
    pub fn encode(&self, tape: &mut Tape, blog: &[usize], user: &EncodedUser) -> Result<(Encoded, DecoderState)> {
        let cfg = &self.config;
        let v = cfg.variant;
        let layout = &self.layout;

        let blog_inputs = self.embed_all(tape, blog)?;
        let blog_out = bilstm_encode(tape, &layout.blog_encoder, &blog_inputs)?;
        let blog_states = tape.stack(&blog_out)?;

        let desc_states = match &layout.desc_encoder {
            Some(enc) => {
                if user.description.is_empty() {
                    return Err(Error::Domain("description must contain at least one token".into()));
                }
                let inputs = self.embed_all(tape, &user.description)?;
                let out = bilstm_encode(tape, enc, &inputs)?;
                Some(tape.stack(&out)?)
            }
            None => None,
        };

        let user_vector = match &layout.user_map {
            Some(map) => {
                if user.features.len() != cfg.feature_dim {
                    return Err(Error::dim("user features", &[user.features.len()], &[cfg.feature_dim]));
                }
                let f = tape.input(Tensor::vector(user.features.clone()))?;
                Some(user_embed(tape, map.w, map.b.expect("user map has a bias"), f)?)
            }
            None => None,
        };

        let h = cfg.hidden;
        let fwd_final = tape.slice(*blog_out.last().expect("non-empty"), 0, h)?;
        let bwd_final = tape.slice(blog_out[0], h, h)?;
        let summary = tape.concat(&[fwd_final, bwd_final])?;
        let zero = tape.input(Tensor::zeros(&[h]))?;
        let mut layers = Vec::with_capacity(cfg.layers);
        for init in &layout.decoder_init {
            let pre = linear(tape, init, summary)?;
            layers.push((tape.tanh(pre)?, zero));
        }
        let memory = if v.use_gated_memory { user_vector } else { None };
        Ok((
            Encoded {
                blog_states,
                desc_states,
                user_vector,
            },
            DecoderState {
                layers,
                memory,
                step: 0,
            },
        ))
    }

    /// One decoder step from `y_prev` (BOS on the first step).
    ///
    /// The decoder input is `[c^X; c^D?; e(y_prev); v_u?; M^o?]` depending on the
    /// variant. The memory decay gate reads `s_{t−1}`, the state available
    /// before the LSTM update, so `M_t^o` can feed the update itself.
    pub fn decoder_step(&self, tape: &mut Tape, state: &DecoderState, y_prev: usize, enc: &Encoded) -> Result<StepOutput> {
        let cfg = &self.config;
        let v = cfg.variant;
        let layout = &self.layout;
        if state.layers.len() != cfg.layers || state.memory.is_some() != v.use_gated_memory {
            return Err(Error::Domain(format!(
                "decoder state does not match variant {v} ({} layers, memory: {})",
                state.layers.len(),
                state.memory.is_some()
            )));
        }
        if enc.desc_states.is_some() != v.use_coattention || enc.user_vector.is_some() != v.needs_user_vector() {
            return Err(Error::Domain(format!("encoder outputs do not match variant {v}")));
        }
        if y_prev >= cfg.vocab_size {
            return Err(Error::Index {
                op: "decoder_step",
                index: y_prev,
                len: cfg.vocab_size,
            });
        }

        let s_prev = state.top();
        let table = tape.param(layout.embedding);
        let e_prev = tape.embedding(table, y_prev)?;

        let w_ax = tape.param(layout.attn_blog);
        let blog_att = attention_context(tape, s_prev, enc.blog_states, w_ax)?;
        let desc_att = match (layout.attn_desc, enc.desc_states) {
            (Some(w), Some(states)) => {
                let w = tape.param(w);
                Some(attention_context(tape, s_prev, states, w)?)
            }
            _ => None,
        };

        let mem_step = match (state.memory, layout.mem_update, layout.mem_read) {
            (Some(m_prev), Some(wu), Some(wo)) => {
                let read_input = tape.concat(&[s_prev, e_prev, blog_att.context])?;
                let (wu, wo) = (tape.param(wu), tape.param(wo));
                Some(gated_memory_step(tape, wu, wo, s_prev, read_input, m_prev)?)
            }
            _ => None,
        };

        let mut parts = vec![blog_att.context];
        if let Some(d) = &desc_att {
            parts.push(d.context);
        }
        parts.push(e_prev);
        if v.use_user_embedding {
            parts.push(enc.user_vector.expect("checked above"));
        }
        if let Some(m) = &mem_step {
            parts.push(m.output);
        }
        let mut x = tape.concat(&parts)?;

        let mut layers = Vec::with_capacity(cfg.layers);
        for (cell, &(h, c)) in layout.decoder.iter().zip(&state.layers) {
            let (h_new, c_new) = lstm_step(tape, cell, x, h, c)?;
            layers.push((h_new, c_new));
            x = h_new;
        }
        let s_t = x;

        let logits = match (layout.out, layout.ext_user, layout.ext_out) {
            (Some(w_o), _, _) => {
                let w = tape.param(w_o);
                tape.matvec(w, s_t)?
            }
            (None, Some(w_r), Some(w_out)) => {
                let user = enc.user_vector.expect("checked above");
                let c_d = desc_att.as_ref().expect("checked above").context;
                let joined = tape.concat(&[user, c_d])?;
                let w_r = tape.param(w_r);
                let r = tape.matvec(w_r, joined)?;
                let head_in = tape.concat(&[s_t, r])?;
                let w_out = tape.param(w_out);
                tape.matvec(w_out, head_in)?
            }
            _ => unreachable!("layout always has an output head"),
        };

        Ok(StepOutput {
            logits,
            state: DecoderState {
                layers,
                memory: mem_step.map(|m| m.memory),
                step: state.step + 1,
            },
            blog_attention: blog_att.weights,
            desc_attention: desc_att.map(|d| d.weights),
            memory_gate: mem_step.map(|m| m.update_gate),
        })
    }
}
