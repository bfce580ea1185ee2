//! Fixtures shared by the benchmarks: a desk-sized model on the synthetic corpus.

use pcgn_core::data::{build_vocab, encode_record, fit_schema, DEFAULT_AGE_DIVISOR};
use pcgn_core::{synthetic, EncodedExample, EncodedUser, Model, ModelConfig, Variant};

pub struct Fixture {
    pub model: Model,
    pub examples: Vec<EncodedExample>,
}

impl Fixture {
    /// Untrained desk model of `variant` over `records` synthetic comments by 4 users.
    pub fn desk(variant: Variant, records: usize) -> Self {
        let raw = synthetic::generate(records, 4, 0).expect("synthetic corpus");
        let vocab = build_vocab(&raw, 1000).expect("vocabulary");
        let schema = fit_schema(&raw, DEFAULT_AGE_DIVISOR).expect("schema");
        let examples = raw.iter().map(|r| encode_record(r, &vocab, &schema, 0)).collect();
        let cfg = ModelConfig::desk(vocab.len(), schema.width(), variant);
        Fixture {
            model: Model::build(cfg, 0).expect("model"),
            examples,
        }
    }

    pub fn user(&self, i: usize) -> EncodedUser {
        let ex = &self.examples[i];
        EncodedUser {
            features: ex.features.clone(),
            description: ex.description.clone(),
        }
    }
}
