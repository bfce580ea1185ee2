use std::collections::BTreeMap;

use pcgn_core::data::{
    build_vocab, encode_record, filter_records, fit_schema, parse_dataset, split_by_blog, split_stats, SplitStats,
    UserProfile,
};
use pcgn_core::synthetic;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{self, records_to_jsonl, sha256_hex, to_pretty_json, write_file};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::table;

/// User, comment and blog counts of the three splits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitReport {
    pub train: SplitStats,
    pub dev: SplitStats,
    pub test: SplitStats,
    pub total: SplitStats,
}

impl SplitReport {
    pub fn to_table(&self) -> String {
        let header = ["", "Train", "Dev", "Test", "Total"].map(String::from).to_vec();
        let cols = [self.train, self.dev, self.test, self.total];
        let row = |label: &str, f: fn(&SplitStats) -> usize| {
            std::iter::once(label.to_string())
                .chain(cols.iter().map(|s| f(s).to_string()))
                .collect::<Vec<_>>()
        };
        table::render(
            &header,
            &[
                row("User", |s| s.users),
                row("Comment", |s| s.comments),
                row("Microblog", |s| s.blogs),
            ],
        )
    }
}

#[derive(Clone, Debug)]
pub struct PrepareOutcome {
    pub report: SplitReport,
    /// SHA-256 of every written artifact, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

/// parse → filter → split by blog → fit vocabulary and schema on train → write.
pub fn run(cfg: &RunConfig) -> Result<PrepareOutcome, CliError> {
    let records = if cfg.synthetic > 0 {
        synthetic::generate(cfg.synthetic, cfg.users, cfg.seed)?
    } else {
        let input = cfg.input.as_ref().ok_or_else(|| {
            CliError::Usage("prepare needs --input <dataset> or --synthetic <N>".into())
        })?;
        parse_dataset(input)?
    };
    let kept = filter_records(&records, cfg.min_tokens, cfg.min_user_records);
    if kept.is_empty() {
        return Err(CliError::Data(format!(
            "empty training set: none of {} records survive filtering (min_tokens = {}, min_user_records = {})",
            records.len(),
            cfg.min_tokens,
            cfg.min_user_records
        )));
    }
    let splits = split_by_blog(&kept, cfg.split_ratios(), cfg.seed)?;
    if splits.train.is_empty() {
        return Err(CliError::Data("empty training set after splitting".into()));
    }
    let vocab = build_vocab(&splits.train, cfg.vocab_size)?;
    let schema = fit_schema(&splits.train, cfg.age_divisor)?;
    for r in splits.train.iter().chain(&splits.dev).chain(&splits.test) {
        encode_record(r, &vocab, &schema, cfg.common_words);
    }
    let users: BTreeMap<String, UserProfile> = kept
        .iter()
        .map(|r| (r.user.user_id.clone(), r.user.clone()))
        .collect();

    let report = SplitReport {
        train: split_stats(&splits.train),
        dev: split_stats(&splits.dev),
        test: split_stats(&splits.test),
        total: split_stats(&kept),
    };
    let files: Vec<(&str, String)> = vec![
        (artifacts::TRAIN, records_to_jsonl(&splits.train)),
        (artifacts::DEV, records_to_jsonl(&splits.dev)),
        (artifacts::TEST, records_to_jsonl(&splits.test)),
        (artifacts::VOCAB, to_pretty_json(&vocab)),
        (artifacts::SCHEMA, to_pretty_json(&schema)),
        (artifacts::USERS, to_pretty_json(&users)),
        (artifacts::STATS_JSON, to_pretty_json(&report)),
        (artifacts::STATS_TXT, report.to_table()),
    ];
    let dir = &cfg.output_dir;
    let mut checksums = BTreeMap::new();
    for (name, contents) in &files {
        write_file(&dir.join(name), contents)?;
        checksums.insert(name.to_string(), sha256_hex(contents.as_bytes()));
    }
    let manifest = json!({ "config": cfg, "files": checksums });
    write_file(&dir.join(artifacts::MANIFEST), &to_pretty_json(&manifest))?;
    Ok(PrepareOutcome { report, checksums })
}
