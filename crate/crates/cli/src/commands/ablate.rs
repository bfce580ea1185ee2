use pcgn_core::{CorpusScores, Variant};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifacts::{to_pretty_json, write_file, Prepared};
use crate::commands::eval::score_records;
use crate::commands::train::{provenance, run_in};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::table;

pub const REPORT_JSON: &str = "ablation.json";
pub const REPORT_TXT: &str = "ablation.txt";

/// Common-word count for the ComWord row when the config leaves it at 0.
pub const DEFAULT_COMWORD_K: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub variant: String,
    pub common_words: usize,
    pub scores: CorpusScores,
    /// Row the deltas are measured against.
    pub baseline: Option<String>,
    pub delta: Option<CorpusScores>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub split: String,
    /// `config` and `inputs` checksums, shared by every row.
    pub provenance: Value,
    pub rows: Vec<Row>,
    /// False when a variant failed and only earlier rows are present.
    pub complete: bool,
}

struct Plan {
    name: &'static str,
    variant: Variant,
    common_words: usize,
    baseline: Option<&'static str>,
}

fn plan(cfg: &RunConfig, extended: bool) -> Vec<Plan> {
    let mut rows: Vec<Plan> = Variant::INCREMENTAL
        .iter()
        .enumerate()
        .map(|(i, (name, v))| Plan {
            name,
            variant: *v,
            common_words: 0,
            baseline: i.checked_sub(1).map(|j| Variant::INCREMENTAL[j].0),
        })
        .collect();
    if extended {
        rows.push(Plan {
            name: "Seq2Seq+Emb",
            variant: Variant::SEQ2SEQ_EMB,
            common_words: 0,
            baseline: Some("Seq2Seq"),
        });
        rows.push(Plan {
            name: "PCGN+ComWord",
            variant: Variant::PCGN,
            common_words: if cfg.common_words > 0 { cfg.common_words } else { DEFAULT_COMWORD_K },
            baseline: Some("+External"),
        });
    }
    rows
}

fn signed(value: f64, decimals: usize) -> String {
    let text = format!("{:+.*}", decimals, value);
    // render "-0.00" as "+0.00"
    if text.trim_start_matches(['+', '-']).chars().all(|c| c == '0' || c == '.') {
        format!("+{}", text.trim_start_matches(['+', '-']))
    } else {
        text
    }
}

fn cell(value: f64, delta: Option<f64>, decimals: usize) -> String {
    match delta {
        Some(d) => format!("{:.*} ({})", decimals, value, signed(d, decimals)),
        None => format!("{:.*}", decimals, value),
    }
}

impl AblationReport {
    /// Table with `value (delta)` cells, deltas against the previous stage.
    pub fn to_table(&self) -> String {
        let header = ["Model", "PPL", "B-2", "METEOR"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let d = r.delta;
                vec![
                    r.name.clone(),
                    cell(r.scores.ppl, d.map(|d| d.ppl), 2),
                    cell(r.scores.bleu2, d.map(|d| d.bleu2), 3),
                    cell(r.scores.meteor, d.map(|d| d.meteor), 3),
                ]
            })
            .collect();
        let mut out = table::render(&header, &rows);
        if !self.complete {
            out.push_str("(incomplete: a variant failed)\n");
        }
        out
    }

    fn save(&self, cfg: &RunConfig) -> Result<(), CliError> {
        write_file(&cfg.output_dir.join(REPORT_JSON), &to_pretty_json(self))?;
        write_file(&cfg.output_dir.join(REPORT_TXT), &self.to_table())
    }
}

/// Trains and scores each variant with the shared seed and data, saving the
/// report after every row so a failure leaves the finished rows on disk.
pub fn run(cfg: &RunConfig, extended: bool, mut echo: impl FnMut(&str)) -> Result<AblationReport, CliError> {
    let prepared = Prepared::load(cfg.data_dir())?;
    let split = if prepared.test.is_empty() { "dev" } else { "test" };
    let records = prepared.split(split)?.to_vec();
    let mut report = AblationReport {
        split: split.to_string(),
        provenance: provenance(cfg, &prepared),
        rows: Vec::new(),
        complete: false,
    };
    for step in plan(cfg, extended) {
        let mut row_cfg = cfg.clone();
        row_cfg.variant = step.variant.name();
        row_cfg.common_words = step.common_words;
        let slug: String = step
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
            .collect();
        let dir = cfg.output_dir.join("ablate").join(slug.trim_matches('_'));
        echo(&format!("== {} ({})", step.name, row_cfg.variant));
        let outcome = run_in(&row_cfg, &prepared, &dir, &mut echo).and_then(|trained| {
            score_records(
                &trained.best,
                &prepared.vocab,
                &prepared.schema,
                step.common_words,
                &records,
                &cfg.decode(),
            )
        });
        let (scores, _) = match outcome {
            Ok(v) => v,
            Err(e) => {
                report.save(cfg)?;
                return Err(e);
            }
        };
        let base = step
            .baseline
            .and_then(|b| report.rows.iter().find(|r| r.name == b))
            .map(|r| r.scores);
        report.rows.push(Row {
            name: step.name.to_string(),
            variant: row_cfg.variant.clone(),
            common_words: step.common_words,
            scores,
            baseline: step.baseline.map(str::to_string),
            delta: base.map(|b| CorpusScores {
                ppl: scores.ppl - b.ppl,
                bleu2: scores.bleu2 - b.bleu2,
                meteor: scores.meteor - b.meteor,
            }),
        });
        report.save(cfg)?;
    }
    report.complete = true;
    report.save(cfg)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_cells_show_signed_changes() {
        assert_eq!(cell(30.73, Some(-1.74), 2), "30.73 (-1.74)");
        assert_eq!(cell(0.2, Some(0.0123), 3), "0.200 (+0.012)");
        assert_eq!(cell(1.0, Some(-0.0001), 2), "1.00 (+0.00)");
        assert_eq!(cell(5.5, None, 2), "5.50");
    }

    #[test]
    fn plan_is_incremental() {
        let cfg = RunConfig::default();
        let p = plan(&cfg, false);
        let names: Vec<_> = p.iter().map(|r| r.name).collect();
        assert_eq!(names, ["Seq2Seq", "+Mem", "+CoAtt", "+External"]);
        assert_eq!(p[0].baseline, None);
        assert_eq!(p[3].baseline, Some("+CoAtt"));
        let ext = plan(&cfg, true);
        assert_eq!(ext.len(), 6);
        assert_eq!(ext[5].common_words, DEFAULT_COMWORD_K);
    }
}
