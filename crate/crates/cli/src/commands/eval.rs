use std::path::{Path, PathBuf};

use pcgn_core::data::{encode_record, FeatureSchema, RawRecord, Vocab};
use pcgn_core::decoding::{beam, DecodeConfig};
use pcgn_core::metrics::{bleu2, meteor_lite, perplexity};
use pcgn_core::{load_checkpoint, CorpusScores, EncodedUser, EvalPair, Model};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifacts::{sha256_file, to_pretty_json, write_file, Prepared};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::table;

/// One decoded example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub user_id: String,
    pub blog: String,
    pub reference: String,
    pub hypothesis: String,
}

/// Decodes every record (beam rank 1) and scores the corpus. References are
/// the raw comment tokens, so out-of-vocabulary words count as misses.
pub fn score_records(
    model: &Model,
    vocab: &Vocab,
    schema: &FeatureSchema,
    k: usize,
    records: &[RawRecord],
    decode: &DecodeConfig,
) -> Result<(CorpusScores, Vec<PairRow>), CliError> {
    if records.is_empty() {
        return Err(CliError::Data("cannot evaluate an empty split".into()));
    }
    let encoded: Vec<_> = records.iter().map(|r| encode_record(r, vocab, schema, k)).collect();
    let ppl = perplexity(model, &encoded)?;
    let mut pairs = Vec::with_capacity(records.len());
    let mut rows = Vec::with_capacity(records.len());
    for (r, ex) in records.iter().zip(&encoded) {
        let user = EncodedUser {
            features: ex.features.clone(),
            description: ex.description.clone(),
        };
        let hyps = beam(model, &ex.blog, &user, decode)?;
        let words = vocab.decode(hyps[0].content());
        rows.push(PairRow {
            user_id: r.user.user_id.clone(),
            blog: r.blog_tokens.join(" "),
            reference: r.comment_tokens.join(" "),
            hypothesis: words.join(" "),
        });
        pairs.push(EvalPair::new(words, r.comment_tokens.clone()));
    }
    let scores = CorpusScores {
        ppl,
        bleu2: bleu2(&pairs)?,
        meteor: meteor_lite(&pairs)?,
    };
    Ok((scores, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub pairs: usize,
    pub ppl: f64,
    pub bleu2: f64,
    pub meteor: f64,
    pub checkpoint: PathBuf,
    pub checkpoint_sha256: String,
    /// Settings of this evaluation run.
    pub config: RunConfig,
    /// Provenance stored in the checkpoint by `train`.
    pub checkpoint_config: Value,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let header = ["Split", "Pairs", "PPL", "B-2", "METEOR"].map(String::from).to_vec();
        let row = vec![
            self.split.clone(),
            self.pairs.to_string(),
            format!("{:.2}", self.ppl),
            format!("{:.3}", self.bleu2),
            format!("{:.3}", self.meteor),
        ];
        table::render(&header, &[row])
    }
}

pub fn report_path(cfg: &RunConfig, split: &str) -> PathBuf {
    cfg.output_dir.join(format!("eval_{split}.json"))
}

/// Evaluates a checkpoint on one prepared split; writes the JSON report and,
/// when asked, a per-pair TSV.
pub fn run(
    cfg: &RunConfig,
    checkpoint: &Path,
    split: &str,
    pairs_tsv: Option<&Path>,
) -> Result<EvalReport, CliError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let model = ckpt.to_model()?;
    let (vocab, schema) = match (&ckpt.vocab, &ckpt.schema) {
        (Some(v), Some(s)) => (v, s),
        _ => {
            return Err(CliError::Data(format!(
                "{} has no vocabulary or feature schema",
                checkpoint.display()
            )))
        }
    };
    let prepared = Prepared::load(cfg.data_dir())?;
    let records = prepared.split(split)?;
    let (scores, rows) = score_records(&model, vocab, schema, ckpt.common_words_k, records, &cfg.decode())?;
    let report = EvalReport {
        split: split.to_string(),
        pairs: rows.len(),
        ppl: scores.ppl,
        bleu2: scores.bleu2,
        meteor: scores.meteor,
        checkpoint: checkpoint.to_path_buf(),
        checkpoint_sha256: sha256_file(checkpoint)?,
        config: cfg.clone(),
        checkpoint_config: ckpt.run_config.clone(),
    };
    write_file(&report_path(cfg, split), &to_pretty_json(&report))?;
    if let Some(path) = pairs_tsv {
        let mut tsv = String::from("user_id\tblog\treference\thypothesis\n");
        for r in &rows {
            tsv.push_str(&format!("{}\t{}\t{}\t{}\n", r.user_id, r.blog, r.reference, r.hypothesis));
        }
        write_file(path, &tsv)?;
    }
    Ok(report)
}
