//! The comment generation network and its baselines.
//!
//! A [`Model`] owns a [`ParamStore`] plus typed handles into it. Which
//! matrices exist depends on the [`Variant`]: the plain sequence-to-sequence
//! baseline allocates no user-side parameters at all.

mod decoder;
mod layers;

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use decoder::{DecoderState, Encoded, StepOutput};
pub use layers::{
    attention_context, bilstm_encode, gated_memory_step, lstm_step, user_embed, AttentionResult,
    BiLstm, LstmCell, MemoryStep,
};

pub const INIT_RANGE: f64 = 0.08;
pub const FORGET_BIAS: f64 = 1.0;

/// Which personalization mechanisms are switched on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variant {
    /// Feed the static user vector into the decoder at every step.
    pub use_user_embedding: bool,
    /// Decaying personality state read through an output gate.
    pub use_gated_memory: bool,
    /// Attention over the user description alongside the blog.
    pub use_coattention: bool,
    /// Output head mixing the decoder state with a user representation.
    pub use_external: bool,
}

impl Variant {
    pub const SEQ2SEQ: Variant = Variant {
        use_user_embedding: false,
        use_gated_memory: false,
        use_coattention: false,
        use_external: false,
    };
    pub const SEQ2SEQ_EMB: Variant = Variant {
        use_user_embedding: true,
        ..Variant::SEQ2SEQ
    };
    pub const PLUS_MEM: Variant = Variant {
        use_gated_memory: true,
        ..Variant::SEQ2SEQ
    };
    pub const PLUS_COATT: Variant = Variant {
        use_coattention: true,
        ..Variant::PLUS_MEM
    };
    pub const PCGN: Variant = Variant {
        use_external: true,
        ..Variant::PLUS_COATT
    };

    /// Preset names accepted by [`Variant::from_str`].
    pub const PRESETS: [(&'static str, Variant); 5] = [
        ("seq2seq", Variant::SEQ2SEQ),
        ("seq2seq+emb", Variant::SEQ2SEQ_EMB),
        ("+mem", Variant::PLUS_MEM),
        ("+coatt", Variant::PLUS_COATT),
        ("pcgn", Variant::PCGN),
    ];

    /// The incremental ablation sequence.
    pub const INCREMENTAL: [(&'static str, Variant); 4] = [
        ("Seq2Seq", Variant::SEQ2SEQ),
        ("+Mem", Variant::PLUS_MEM),
        ("+CoAtt", Variant::PLUS_COATT),
        ("+External", Variant::PCGN),
    ];

    pub fn validate(&self) -> Result<()> {
        if self.use_external && !self.use_coattention {
            return Err(Error::Config(
                "the external head reads the description context; enable co-attention".into(),
            ));
        }
        Ok(())
    }

    /// Whether the user feature vector is computed at all.
    pub fn needs_user_vector(&self) -> bool {
        self.use_user_embedding || self.use_gated_memory || self.use_external
    }

    pub fn name(&self) -> String {
        Variant::PRESETS
            .iter()
            .find(|(_, v)| v == self)
            .map(|(n, _)| n.to_string())
            .unwrap_or_else(|| {
                format!(
                    "custom(emb={},mem={},coatt={},ext={})",
                    self.use_user_embedding,
                    self.use_gated_memory,
                    self.use_coattention,
                    self.use_external
                )
            })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = match key.as_str() {
            "+external" | "pcgn+comword" => "pcgn",
            "mem" => "+mem",
            "coatt" => "+coatt",
            other => other,
        };
        Variant::PRESETS
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<_> = Variant::PRESETS.iter().map(|(n, _)| *n).collect();
                Error::Config(format!("unknown variant {s:?}; expected one of {names:?}"))
            })
    }
}

/// Dimensions and variant of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub word_dim: usize,
    /// Hidden width of the blog encoder and of the decoder.
    pub hidden: usize,
    /// Layer count of the blog encoder and of the decoder.
    pub layers: usize,
    /// Hidden width of the description encoder.
    pub desc_hidden: usize,
    /// Width of the user vector and of the personality state.
    pub user_dim: usize,
    /// Width of the numeric user features.
    pub feature_dim: usize,
    pub variant: Variant,
}

impl ModelConfig {
    /// Full-scale dimensions.
    pub fn full_scale(feature_dim: usize, variant: Variant) -> Self {
        ModelConfig {
            vocab_size: 40_000,
            word_dim: 300,
            hidden: 512,
            layers: 2,
            desc_hidden: 200,
            user_dim: 100,
            feature_dim,
            variant,
        }
    }

    /// Small dimensions for laptop-scale runs and tests. One layer: with
    /// 16-wide inputs and ±0.08 init a second layer stalls plain SGD on the
    /// blog-to-decoder path for hundreds of epochs.
    pub fn desk(vocab_size: usize, feature_dim: usize, variant: Variant) -> Self {
        ModelConfig {
            vocab_size,
            word_dim: 16,
            hidden: 32,
            layers: 1,
            desc_hidden: 16,
            user_dim: 8,
            feature_dim,
            variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        let dims = [
            ("vocab_size", self.vocab_size),
            ("word_dim", self.word_dim),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("desc_hidden", self.desc_hidden),
            ("user_dim", self.user_dim),
            ("feature_dim", self.feature_dim),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.vocab_size <= crate::data::EOS {
            return Err(Error::Config("vocab_size must cover the reserved tokens".into()));
        }
        Ok(())
    }

    /// Width of the decoder input vector for this variant.
    pub fn decoder_input_dim(&self) -> usize {
        let v = &self.variant;
        let mut d = 2 * self.hidden + self.word_dim;
        if v.use_coattention {
            d += 2 * self.desc_hidden;
        }
        if v.use_user_embedding {
            d += self.user_dim;
        }
        if v.use_gated_memory {
            d += self.user_dim;
        }
        d
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

/// Handles to every parameter of a model.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub embedding: ParamId,
    pub blog_encoder: BiLstm,
    pub desc_encoder: Option<BiLstm>,
    pub user_map: Option<Linear>,
    pub attn_blog: ParamId,
    pub attn_desc: Option<ParamId>,
    pub mem_update: Option<ParamId>,
    pub mem_read: Option<ParamId>,
    pub decoder: Vec<LstmCell>,
    pub decoder_init: Vec<Linear>,
    pub out: Option<ParamId>,
    pub ext_user: Option<ParamId>,
    pub ext_out: Option<ParamId>,
}

struct Builder<'a> {
    store: ParamStore,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl Builder<'_> {
    fn tensor(&mut self, shape: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(shape);
        if let Some(rng) = self.rng.as_deref_mut() {
            let dist = Uniform::new_inclusive(-INIT_RANGE, INIT_RANGE);
            t.data_mut().iter_mut().for_each(|v| *v = dist.sample(rng));
        }
        t
    }

    fn add(&mut self, name: String, shape: &[usize]) -> Result<ParamId> {
        let t = self.tensor(shape);
        self.store.add(name, t)
    }

    fn lstm(&mut self, prefix: &str, input: usize, hidden: usize) -> Result<LstmCell> {
        let w_ih = self.add(format!("{prefix}.w_ih"), &[4 * hidden, input])?;
        let w_hh = self.add(format!("{prefix}.w_hh"), &[4 * hidden, hidden])?;
        let mut bias = self.tensor(&[4 * hidden]);
        bias.data_mut()[hidden..2 * hidden].fill(FORGET_BIAS);
        let b = self.store.add(format!("{prefix}.b"), bias)?;
        Ok(LstmCell {
            w_ih,
            w_hh,
            b,
            input,
            hidden,
        })
    }

    fn bilstm(&mut self, prefix: &str, input: usize, hidden: usize, layers: usize) -> Result<BiLstm> {
        let mut out = Vec::with_capacity(layers);
        for l in 0..layers {
            let width = if l == 0 { input } else { 2 * hidden };
            let fwd = self.lstm(&format!("{prefix}.l{l}.fwd"), width, hidden)?;
            let bwd = self.lstm(&format!("{prefix}.l{l}.bwd"), width, hidden)?;
            out.push((fwd, bwd));
        }
        Ok(BiLstm { layers: out })
    }
}

fn build_layout(config: &ModelConfig, rng: Option<&mut ChaCha8Rng>) -> Result<(Layout, ParamStore)> {
    config.validate()?;
    let v = config.variant;
    let (h, hd, du) = (config.hidden, config.desc_hidden, config.user_dim);
    let mut b = Builder {
        store: ParamStore::new(),
        rng,
    };
    let embedding = b.add("embedding".into(), &[config.vocab_size, config.word_dim])?;
    let blog_encoder = b.bilstm("blog_enc", config.word_dim, h, config.layers)?;
    let desc_encoder = if v.use_coattention {
        Some(b.bilstm("desc_enc", config.word_dim, hd, 1)?)
    } else {
        None
    };
    let user_map = if v.needs_user_vector() {
        Some(Linear {
            w: b.add("user_map.w".into(), &[du, config.feature_dim])?,
            b: Some(b.add("user_map.b".into(), &[du])?),
        })
    } else {
        None
    };
    let attn_blog = b.add("attn_blog".into(), &[h, 2 * h])?;
    let attn_desc = if v.use_coattention {
        Some(b.add("attn_desc".into(), &[h, 2 * hd])?)
    } else {
        None
    };
    let (mem_update, mem_read) = if v.use_gated_memory {
        (
            Some(b.add("mem_update".into(), &[du, h])?),
            Some(b.add("mem_read".into(), &[du, h + config.word_dim + 2 * h])?),
        )
    } else {
        (None, None)
    };
    let mut decoder = Vec::with_capacity(config.layers);
    let mut decoder_init = Vec::with_capacity(config.layers);
    for l in 0..config.layers {
        let width = if l == 0 { config.decoder_input_dim() } else { h };
        decoder.push(b.lstm(&format!("dec.l{l}"), width, h)?);
    }
    for l in 0..config.layers {
        decoder_init.push(Linear {
            w: b.add(format!("dec_init.l{l}.w"), &[h, 2 * h])?,
            b: Some(b.add(format!("dec_init.l{l}.b"), &[h])?),
        });
    }
    let (out, ext_user, ext_out) = if v.use_external {
        (
            None,
            Some(b.add("ext_user".into(), &[du, du + 2 * hd])?),
            Some(b.add("ext_out".into(), &[config.vocab_size, h + du])?),
        )
    } else {
        (Some(b.add("out".into(), &[config.vocab_size, h])?), None, None)
    };
    let layout = Layout {
        embedding,
        blog_encoder,
        desc_encoder,
        user_map,
        attn_blog,
        attn_desc,
        mem_update,
        mem_read,
        decoder,
        decoder_init,
        out,
        ext_user,
        ext_out,
    };
    Ok((layout, b.store))
}

/// A model: configuration plus parameters.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    store: ParamStore,
    layout: Layout,
}

impl Model {
    /// Allocates and initializes parameters: uniform in ±0.08 from a seeded
    /// generator, LSTM forget-gate biases set to 1.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (layout, store) = build_layout(&config, Some(&mut rng))?;
        Ok(Model {
            config,
            store,
            layout,
        })
    }

    /// Rebuilds a model from named parameter tensors, validating every shape.
    pub fn from_named(config: ModelConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        let (layout, mut store) = build_layout(&config, None)?;
        if named.len() != store.len() {
            return Err(Error::CheckpointCorrupt(format!(
                "expected {} parameters, found {}",
                store.len(),
                named.len()
            )));
        }
        for (name, tensor) in named {
            let id = store.id(&name).ok_or_else(|| {
                Error::CheckpointCorrupt(format!("unexpected parameter {name}"))
            })?;
            let expected = store.get(id).shape().to_vec();
            if tensor.shape() != expected.as_slice() {
                return Err(Error::CheckpointShape {
                    name,
                    stored: tensor.shape().to_vec(),
                    expected,
                });
            }
            *store.get_mut(id) = tensor;
        }
        Ok(Model {
            config,
            store,
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Mutable access to a parameter by name.
    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let id = self.store.id(name)?;
        Some(self.store.get_mut(id))
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.store.id(name).map(|id| self.store.get(id))
    }

    pub fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_flags() {
        assert_eq!("seq2seq".parse::<Variant>().unwrap(), Variant::SEQ2SEQ);
        assert_eq!("PCGN".parse::<Variant>().unwrap(), Variant::PCGN);
        assert_eq!("+External".parse::<Variant>().unwrap(), Variant::PCGN);
        const {
            assert!(Variant::PCGN.use_gated_memory && Variant::PCGN.use_coattention);
            assert!(!Variant::PCGN.use_user_embedding);
            assert!(Variant::PLUS_COATT.use_gated_memory && !Variant::PLUS_COATT.use_external);
        }
        assert!("gru".parse::<Variant>().is_err());
        for (name, v) in Variant::PRESETS {
            assert_eq!(v.name(), name);
        }
        let bad = Variant {
            use_external: true,
            ..Variant::SEQ2SEQ
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = ModelConfig::desk(40, 7, Variant::PCGN);
        let a = Model::build(cfg.clone(), 11).unwrap();
        let b = Model::build(cfg.clone(), 11).unwrap();
        let c = Model::build(cfg, 12).unwrap();
        assert!(a.params().bitwise_eq(b.params()));
        assert!(!a.params().bitwise_eq(c.params()));
    }

    #[test]
    fn init_range_and_forget_bias() {
        let m = Model::build(ModelConfig::desk(40, 7, Variant::PCGN), 3).unwrap();
        for (_, name, t) in m.params().iter() {
            if name.ends_with(".b") && !name.starts_with("user_map") && !name.starts_with("dec_init") {
                let h = t.len() / 4;
                assert!(t.data()[h..2 * h].iter().all(|&v| v == FORGET_BIAS), "{name}");
            } else {
                assert!(t.data().iter().all(|v| v.abs() <= INIT_RANGE), "{name}");
            }
        }
    }

    #[test]
    fn seq2seq_allocates_no_user_parameters() {
        let m = Model::build(ModelConfig::desk(40, 7, Variant::SEQ2SEQ), 0).unwrap();
        for name in ["mem_update", "mem_read", "attn_desc", "ext_user", "ext_out", "user_map.w"] {
            assert!(m.param(name).is_none(), "{name}");
        }
        assert!(m.params().iter().all(|(_, n, _)| !n.starts_with("desc_enc")));
        assert!(m.param("out").is_some());
    }

    #[test]
    fn desk_parameter_count_matches_shape_inventory() {
        // V=50, k=7, d_w=16, H=32, L=1, H_d=16, d_u=8
        let (v, k, dw, h, hd, du) = (50, 7, 16, 32, 16, 8);
        let lstm = |inp: usize, hid: usize| 4 * hid * inp + 4 * hid * hid + 4 * hid;
        let blog_enc = 2 * lstm(dw, h);
        let desc_enc = 2 * lstm(dw, hd);
        let user_map = du * k + du;
        let attn = h * 2 * h + h * 2 * hd;
        let mem = du * h + du * (h + dw + 2 * h);
        let dec_in = 2 * h + 2 * hd + dw + du;
        let dec = lstm(dec_in, h);
        let dec_init = h * 2 * h + h;
        let ext = du * (du + 2 * hd) + v * (h + du);
        let expected =
            v * dw + blog_enc + desc_enc + user_map + attn + mem + dec + dec_init + ext;
        let m = Model::build(ModelConfig::desk(v, k, Variant::PCGN), 0).unwrap();
        assert_eq!(m.params().scalar_count(), expected);

        let s2s = Model::build(ModelConfig::desk(v, k, Variant::SEQ2SEQ), 0).unwrap();
        let expected_s2s = v * dw
            + blog_enc
            + h * 2 * h
            + lstm(2 * h + dw, h)
            + dec_init
            + v * h;
        assert_eq!(s2s.params().scalar_count(), expected_s2s);
    }

    #[test]
    fn invalid_dimensions_are_rejected() {
        let mut cfg = ModelConfig::desk(40, 7, Variant::PCGN);
        cfg.hidden = 0;
        assert!(matches!(Model::build(cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn full_scale_dimensions() {
        let c = ModelConfig::full_scale(10, Variant::PCGN);
        assert_eq!(
            (c.vocab_size, c.word_dim, c.hidden, c.layers, c.desc_hidden, c.user_dim),
            (40_000, 300, 512, 2, 200, 100)
        );
    }
}
