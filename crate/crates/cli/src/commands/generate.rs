use std::collections::BTreeMap;
use std::path::Path;

use pcgn_core::data::{encode_user, parse_line, UserProfile};
use pcgn_core::decoding::{beam, DecodeConfig};
use pcgn_core::Checkpoint;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifacts::read_json;
use crate::error::CliError;
use crate::table;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub log_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserOutput {
    pub user_id: String,
    /// Beam results, best first.
    pub candidates: Vec<Candidate>,
}

/// Parses an inline profile written with the dataset's field names.
pub fn parse_profile(json: &str) -> Result<UserProfile, CliError> {
    let mut value: Value = serde_json::from_str(json)
        .map_err(|e| CliError::Usage(format!("inline profile is not valid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Usage("inline profile must be a JSON object".into()))?;
    obj.entry("blog").or_insert(Value::String(String::new()));
    obj.entry("comment").or_insert(Value::String(String::new()));
    parse_line(&value.to_string())
        .map(|r| r.user)
        .map_err(|e| CliError::Usage(format!("inline profile: {e}")))
}

/// Looks up `ids` in the prepared users file and appends inline profiles.
pub fn resolve_users(
    ids: &[String],
    inline: &[String],
    users_file: &Path,
) -> Result<Vec<UserProfile>, CliError> {
    let mut out = Vec::new();
    if !ids.is_empty() {
        let known: BTreeMap<String, UserProfile> = read_json(users_file)?;
        for id in ids {
            let profile = known.get(id).ok_or_else(|| {
                let available: Vec<&str> = known.keys().map(String::as_str).collect();
                CliError::Data(format!(
                    "unknown user_id {id:?}; available ids: {}",
                    available.join(", ")
                ))
            })?;
            out.push(profile.clone());
        }
    }
    for json in inline {
        out.push(parse_profile(json)?);
    }
    if out.is_empty() {
        return Err(CliError::Usage("generate needs at least one --user or --profile".into()));
    }
    Ok(out)
}

/// Beam-searches a comment on `blog` for each user.
pub fn generate(
    ckpt: &Checkpoint,
    blog: &str,
    users: &[UserProfile],
    decode: &DecodeConfig,
) -> Result<Vec<UserOutput>, CliError> {
    let model = ckpt.to_model()?;
    let (vocab, schema) = match (&ckpt.vocab, &ckpt.schema) {
        (Some(v), Some(s)) => (v, s),
        _ => return Err(CliError::Data("checkpoint has no vocabulary or feature schema".into())),
    };
    let blog_tokens: Vec<String> = blog.split_whitespace().map(str::to_string).collect();
    if blog_tokens.is_empty() {
        return Err(CliError::Usage("blog text is empty".into()));
    }
    let blog_ids = vocab.encode(&blog_tokens);
    users
        .iter()
        .map(|u| {
            let encoded = encode_user(u, vocab, schema, ckpt.common_words_k);
            let hyps = beam(&model, &blog_ids, &encoded, decode)?;
            Ok(UserOutput {
                user_id: u.user_id.clone(),
                candidates: hyps
                    .iter()
                    .map(|h| Candidate {
                        text: vocab.decode(h.content()).join(" "),
                        log_prob: h.log_prob,
                    })
                    .collect(),
            })
        })
        .collect()
}

/// Case-study layout: one column per user, one row per beam rank.
pub fn side_by_side(outputs: &[UserOutput]) -> String {
    let header: Vec<String> = std::iter::once("Rank".to_string())
        .chain(outputs.iter().map(|o| o.user_id.clone()))
        .collect();
    let depth = outputs.iter().map(|o| o.candidates.len()).max().unwrap_or(0);
    let rows: Vec<Vec<String>> = (0..depth)
        .map(|i| {
            std::iter::once((i + 1).to_string())
                .chain(outputs.iter().map(|o| {
                    o.candidates
                        .get(i)
                        .map(|c| format!("{} ({:.3})", c.text, c.log_prob))
                        .unwrap_or_default()
                }))
                .collect()
        })
        .collect();
    table::render(&header, &rows)
}
