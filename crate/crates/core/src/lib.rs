//! Personalized comment generation.
//!
//! Given a blog post and a user profile (demographic features plus a free-text
//! description), the models in this crate generate a comment in that user's
//! style. The crate bundles everything needed to train and evaluate them at
//! desk scale:
//!
//! - [`autodiff`]: dense tensors with a reverse-mode tape, checked against
//!   central finite differences in [`gradcheck`].
//! - [`data`]: dataset parsing, filtering, one-hot featurization, vocabulary
//!   and blog-disjoint splits.
//! - [`model`]: the sequence-to-sequence baseline, the user-embedding baseline,
//!   and the personalized network with gated personality memory, blog/user
//!   co-attention and an external personality head.
//! - [`training`], [`checkpoint`]: SGD on the teacher-forced log-likelihood and
//!   model persistence.
//! - [`decoding`]: greedy and beam search.
//! - [`metrics`]: perplexity, BLEU-2 and exact-match METEOR.

pub mod autodiff;
pub mod checkpoint;
pub mod data;
pub mod decoding;
pub mod error;
pub mod gradcheck;
pub mod metrics;
pub mod model;
pub mod synthetic;
pub mod tensor;
pub mod training;

pub use autodiff::{Activation, GradientSet, ParamId, ParamStore, Tape, Var};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use data::{EncodedExample, EncodedUser, FeatureSchema, RawRecord, UserProfile, Vocab};
pub use decoding::{beam_search, greedy_decode, DecodeConfig, Hypothesis, ModelScorer, StepScorer};
pub use error::{Error, Result};
pub use metrics::{CorpusScores, EvalPair};
pub use model::{Model, ModelConfig, Variant};
pub use tensor::Tensor;
pub use training::{EpochMetrics, OptimizerConfig};
