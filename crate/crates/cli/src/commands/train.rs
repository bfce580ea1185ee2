use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pcgn_core::data::{encode_record, EncodedExample, RawRecord};
use pcgn_core::metrics::perplexity;
use pcgn_core::training::train;
use pcgn_core::{save_checkpoint, Checkpoint, EpochMetrics, Model};
use serde_json::{json, Value};

use crate::artifacts::Prepared;
use crate::config::RunConfig;
use crate::error::CliError;

pub const FINAL_CHECKPOINT: &str = "final.ckpt.json";
pub const BEST_CHECKPOINT: &str = "best.ckpt.json";
pub const TRAIN_LOG: &str = "train.log";
pub const DEV_LOG: &str = "dev.log";

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: Model,
    /// Model with the lowest dev perplexity, or the final one without a dev split.
    pub best: Model,
    pub final_path: PathBuf,
    pub best_path: PathBuf,
    pub history: Vec<EpochMetrics>,
    pub initial_train_ppl: f64,
    pub final_train_ppl: f64,
    pub best_dev_ppl: Option<f64>,
}

pub fn encode_all(records: &[RawRecord], prepared: &Prepared, k: usize) -> Vec<EncodedExample> {
    records
        .iter()
        .map(|r| encode_record(r, &prepared.vocab, &prepared.schema, k))
        .collect()
}

/// Config and input checksums stored in every checkpoint and report.
pub fn provenance(cfg: &RunConfig, prepared: &Prepared) -> Value {
    json!({ "config": cfg, "inputs": prepared.checksums })
}

fn log_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::data(path.display(), e)
}

/// Trains `cfg.variant` on the prepared training split, writing logs and
/// checkpoints into `out_dir`. `echo` receives each epoch's log line.
pub fn run_in(
    cfg: &RunConfig,
    prepared: &Prepared,
    out_dir: &Path,
    mut echo: impl FnMut(&str),
) -> Result<TrainOutcome, CliError> {
    let k = cfg.common_words;
    let train_set = encode_all(&prepared.train, prepared, k);
    let dev_set = encode_all(&prepared.dev, prepared, k);
    if train_set.is_empty() {
        return Err(CliError::Data("empty training set".into()));
    }
    let model_cfg = cfg.model_config(prepared.vocab.len(), prepared.schema.width())?;
    let mut model = Model::build(model_cfg, cfg.seed)?;
    let opt = cfg.optimizer();
    let initial_train_ppl = perplexity(&model, &train_set)?;

    std::fs::create_dir_all(out_dir).map_err(|e| log_err(out_dir, e))?;
    let log_path = out_dir.join(TRAIN_LOG);
    let dev_path = out_dir.join(DEV_LOG);
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| log_err(&log_path, e))?);
    let mut dev_log = BufWriter::new(File::create(&dev_path).map_err(|e| log_err(&dev_path, e))?);

    let echo_cfg = provenance(cfg, prepared);
    let steps_per_epoch = train_set.len().div_ceil(opt.batch_size) as u64;
    let checkpoint = |m: &Model, epoch: usize| {
        Checkpoint::new(
            m,
            Some(prepared.vocab.clone()),
            Some(prepared.schema.clone()),
            epoch as u64 * steps_per_epoch,
        )
        .with_common_words(k)
        .with_run_config(echo_cfg.clone())
    };
    let best_path = out_dir.join(BEST_CHECKPOINT);
    let mut best: Option<(f64, Model)> = None;
    let history = train(&mut model, &train_set, &opt, |m, metrics| {
        let line = metrics.log_line();
        writeln!(log, "{line}").map_err(pcgn_core::Error::Io)?;
        echo(&line);
        if !dev_set.is_empty() {
            let dev_ppl = perplexity(m, &dev_set)?;
            writeln!(dev_log, "{}\t{dev_ppl:.6}", metrics.epoch).map_err(pcgn_core::Error::Io)?;
            if best.as_ref().is_none_or(|(b, _)| dev_ppl < *b) {
                save_checkpoint(&checkpoint(m, metrics.epoch), &best_path)?;
                best = Some((dev_ppl, m.clone()));
            }
        }
        Ok(())
    })?;
    log.flush().map_err(|e| log_err(&log_path, e))?;
    dev_log.flush().map_err(|e| log_err(&dev_path, e))?;

    let final_path = out_dir.join(FINAL_CHECKPOINT);
    save_checkpoint(&checkpoint(&model, opt.epochs), &final_path)?;
    let (best_dev_ppl, best_model) = match best {
        Some((ppl, m)) => (Some(ppl), m),
        None => {
            save_checkpoint(&checkpoint(&model, opt.epochs), &best_path)?;
            (None, model.clone())
        }
    };
    let final_train_ppl = perplexity(&model, &train_set)?;
    Ok(TrainOutcome {
        model,
        best: best_model,
        final_path,
        best_path,
        history,
        initial_train_ppl,
        final_train_ppl,
        best_dev_ppl,
    })
}

pub fn run(cfg: &RunConfig, echo: impl FnMut(&str)) -> Result<TrainOutcome, CliError> {
    let prepared = Prepared::load(cfg.data_dir())?;
    run_in(cfg, &prepared, &cfg.output_dir, echo)
}
