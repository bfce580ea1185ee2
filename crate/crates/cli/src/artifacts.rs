//! Layout and checksums of the prepared-data directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use pcgn_core::data::{parse_dataset, FeatureSchema, RawRecord, UserProfile, Vocab};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TRAIN: &str = "train.jsonl";
pub const DEV: &str = "dev.jsonl";
pub const TEST: &str = "test.jsonl";
pub const VOCAB: &str = "vocab.json";
pub const SCHEMA: &str = "schema.json";
pub const USERS: &str = "users.json";
pub const STATS_TXT: &str = "stats.txt";
pub const STATS_JSON: &str = "stats.json";
pub const MANIFEST: &str = "manifest.json";

/// Files that later commands read, and therefore checksum.
pub const INPUTS: [&str; 6] = [TRAIN, DEV, TEST, VOCAB, SCHEMA, USERS];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(path.display(), e))?;
    Ok(sha256_hex(&bytes))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::data(parent.display(), e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::data(path.display(), e))
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::data(
            path.display(),
            format!("{e} (run `pcgn prepare` first or set --data-dir)"),
        )
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path.display(), e))
}

pub fn records_to_jsonl(records: &[RawRecord]) -> String {
    records.iter().map(|r| r.to_json_line() + "\n").collect()
}

/// The outputs of `prepare`, loaded back.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Vec<RawRecord>,
    pub dev: Vec<RawRecord>,
    pub test: Vec<RawRecord>,
    pub vocab: Vocab,
    pub schema: FeatureSchema,
    pub users: BTreeMap<String, UserProfile>,
    /// SHA-256 of every input file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

impl Prepared {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        for name in INPUTS {
            let path = dir.join(name);
            if !path.exists() {
                return Err(CliError::Data(format!(
                    "{} not found (run `pcgn prepare` first or set --data-dir)",
                    path.display()
                )));
            }
        }
        let read = |name: &str| -> Result<Vec<RawRecord>, CliError> { Ok(parse_dataset(&dir.join(name))?) };
        let mut checksums = BTreeMap::new();
        for name in INPUTS {
            checksums.insert(name.to_string(), sha256_file(&dir.join(name))?);
        }
        Ok(Prepared {
            train: read(TRAIN)?,
            dev: read(DEV)?,
            test: read(TEST)?,
            vocab: read_json(&dir.join(VOCAB))?,
            schema: read_json(&dir.join(SCHEMA))?,
            users: read_json(&dir.join(USERS))?,
            checksums,
        })
    }

    pub fn split(&self, name: &str) -> Result<&[RawRecord], CliError> {
        match name {
            "train" => Ok(&self.train),
            "dev" => Ok(&self.dev),
            "test" => Ok(&self.test),
            other => Err(CliError::Usage(format!(
                "unknown split {other:?}; expected train, dev or test"
            ))),
        }
    }
}
