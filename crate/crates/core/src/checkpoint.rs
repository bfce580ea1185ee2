//! Versioned checkpoint files.
//!
//! A checkpoint is a single JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "model": { ...ModelConfig... },
//!   "vocab": { "tokens": [...] } | null,
//!   "schema": { ...FeatureSchema... } | null,
//!   "common_words_k": 0,
//!   "step": 1234,
//!   "run_config": { ... free-form echo ... },
//!   "params": [ { "name": "embedding", "shape": [V, d], "data": "<base64>" }, ... ]
//! }
//! ```
//!
//! Parameter data is the row-major sequence of IEEE-754 binary64 values,
//! each in little-endian byte order, base64-encoded with the standard
//! alphabet and padding.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{FeatureSchema, Vocab};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: String,
}

/// Everything needed to restore a model and encode new inputs for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: ModelConfig,
    pub vocab: Option<Vocab>,
    pub schema: Option<FeatureSchema>,
    #[serde(default)]
    pub common_words_k: usize,
    pub step: u64,
    #[serde(default)]
    pub run_config: Value,
    pub params: Vec<ParamRecord>,
}

pub fn encode_f64s(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_f64s(text: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| Error::CheckpointCorrupt(format!("bad base64: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::CheckpointCorrupt(format!(
            "parameter payload of {} bytes is not a whole number of doubles",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

impl Checkpoint {
    pub fn new(model: &Model, vocab: Option<Vocab>, schema: Option<FeatureSchema>, step: u64) -> Self {
        let params = model
            .params()
            .iter()
            .map(|(_, name, t)| ParamRecord {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: encode_f64s(t.data()),
            })
            .collect();
        Checkpoint {
            format_version: FORMAT_VERSION,
            model: model.config().clone(),
            vocab,
            schema,
            common_words_k: 0,
            step,
            run_config: Value::Null,
            params,
        }
    }

    pub fn with_run_config(mut self, run_config: Value) -> Self {
        self.run_config = run_config;
        self
    }

    pub fn with_common_words(mut self, k: usize) -> Self {
        self.common_words_k = k;
        self
    }

    /// Restores the model, validating every parameter shape against the config.
    pub fn to_model(&self) -> Result<Model> {
        let named = self
            .params
            .iter()
            .map(|p| {
                let data = decode_f64s(&p.data)?;
                let tensor = Tensor::new(p.shape.clone(), data).map_err(|_| {
                    Error::CheckpointCorrupt(format!(
                        "parameter {} payload does not match its shape {:?}",
                        p.name, p.shape
                    ))
                })?;
                Ok((p.name.clone(), tensor))
            })
            .collect::<Result<Vec<_>>>()?;
        Model::from_named(self.model.clone(), named)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::CheckpointCorrupt(format!("not valid JSON: {e}")))?;
        let version = value
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::CheckpointCorrupt("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::CheckpointVersion {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| Error::CheckpointCorrupt(e.to_string()))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, checkpoint.to_json())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    fn model() -> Model {
        let mut cfg = ModelConfig::desk(20, 5, Variant::PCGN);
        cfg.hidden = 4;
        cfg.desc_hidden = 3;
        cfg.word_dim = 3;
        cfg.user_dim = 2;
        Model::build(cfg, 9).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&Checkpoint::new(&m, None, None, 7), &path).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.step, 7);
        assert!(ck.to_model().unwrap().params().bitwise_eq(m.params()));
    }

    #[test]
    fn special_values_survive_encoding() {
        let v = vec![0.0, -0.0, f64::MIN_POSITIVE, 1e308, -1.5, f64::EPSILON];
        let back = decode_f64s(&encode_f64s(&v)).unwrap();
        assert!(v.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn edited_hidden_size_is_a_shape_error() {
        let mut ck = Checkpoint::new(&model(), None, None, 0);
        ck.model.hidden = 5;
        assert!(matches!(ck.to_model(), Err(Error::CheckpointShape { .. })));
    }

    #[test]
    fn version_and_corruption_errors_are_distinct() {
        let ck = Checkpoint::new(&model(), None, None, 0);
        let mut value: Value = serde_json::from_str(&ck.to_json()).unwrap();
        value["format_version"] = 99.into();
        assert!(matches!(
            Checkpoint::from_json(&value.to_string()),
            Err(Error::CheckpointVersion { found: 99, .. })
        ));
        assert!(matches!(Checkpoint::from_json("{oops"), Err(Error::CheckpointCorrupt(_))));

        let mut bad = ck.clone();
        bad.params[0].data = "!!!".into();
        assert!(matches!(bad.to_model(), Err(Error::CheckpointCorrupt(_))));
        let mut short = ck.clone();
        short.params[0].data = encode_f64s(&[1.0]);
        assert!(matches!(short.to_model(), Err(Error::CheckpointCorrupt(_))));
        let mut missing = ck;
        missing.params.pop();
        assert!(matches!(missing.to_model(), Err(Error::CheckpointCorrupt(_))));
    }
}
