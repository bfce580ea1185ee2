//! Dataset ingestion: parsing, filtering, vocabulary and feature schema,
//! common-word augmentation and blog-disjoint splitting.
//!
//! Input files hold one JSON object per line with the keys `blog`, `comment`,
//! `user_id`, `province`, `city`, `gender`, `age`, `marital_status`,
//! `description` and `common_words`. Text fields are pre-tokenized and
//! space-separated; `common_words` is an array of strings.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Profile of the user who wrote a comment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    #[serde(default)]
    pub province: String,
    #[serde(default)]
    pub city: String,
    #[serde(default)]
    pub gender: String,
    #[serde(default)]
    pub marital_status: String,
    #[serde(default)]
    pub age: Option<u32>,
    #[serde(default)]
    pub description_tokens: Vec<String>,
    #[serde(default)]
    pub common_words: Vec<String>,
}

/// One parsed line of the dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRecord {
    pub blog_tokens: Vec<String>,
    pub comment_tokens: Vec<String>,
    pub user: UserProfile,
}

impl RawRecord {
    /// Serializes back to the dataset line format.
    pub fn to_json_line(&self) -> String {
        let u = &self.user;
        let mut obj = Map::new();
        obj.insert("blog".into(), self.blog_tokens.join(" ").into());
        obj.insert("comment".into(), self.comment_tokens.join(" ").into());
        obj.insert("user_id".into(), u.user_id.clone().into());
        obj.insert("province".into(), u.province.clone().into());
        obj.insert("city".into(), u.city.clone().into());
        obj.insert("gender".into(), u.gender.clone().into());
        obj.insert("age".into(), u.age.map_or(Value::Null, Value::from));
        obj.insert("marital_status".into(), u.marital_status.clone().into());
        obj.insert("description".into(), u.description_tokens.join(" ").into());
        obj.insert("common_words".into(), u.common_words.clone().into());
        Value::Object(obj).to_string()
    }

    pub fn blog_key(&self) -> String {
        self.blog_tokens.join(" ")
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn text_field(obj: &Map<String, Value>, key: &str) -> std::result::Result<Option<String>, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(other) => Err(format!("field {key:?} must be a string, got {other}")),
    }
}

fn age_field(obj: &Map<String, Value>) -> std::result::Result<Option<u32>, String> {
    match obj.get("age") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n
            .as_u64()
            .and_then(|v| u32::try_from(v).ok())
            .map(Some)
            .ok_or_else(|| format!("age must be a non-negative integer, got {n}")),
        Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
        Some(Value::String(s)) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("age must be a non-negative integer, got {s:?}")),
        Some(other) => Err(format!("age must be a number, got {other}")),
    }
}

/// Parses one dataset line. Errors are plain messages; callers add location.
pub fn parse_line(line: &str) -> std::result::Result<RawRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("expected a JSON object".into());
    };
    let required = |key: &str| -> std::result::Result<String, String> {
        text_field(&obj, key)?.ok_or_else(|| format!("missing required key {key:?}"))
    };
    let blog = required("blog")?;
    let comment = required("comment")?;
    let user_id = required("user_id")?;
    if user_id.trim().is_empty() {
        return Err("user_id must be non-empty".into());
    }
    let optional = |key: &str| -> std::result::Result<String, String> {
        Ok(text_field(&obj, key)?.unwrap_or_default().trim().to_string())
    };
    let common_words = match obj.get("common_words") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.trim().to_string()),
                other => Err(format!("common_words entries must be strings, got {other}")),
            })
            .filter(|w| !matches!(w, Ok(s) if s.is_empty()))
            .collect::<std::result::Result<_, _>>()?,
        Some(other) => return Err(format!("common_words must be an array, got {other}")),
    };
    Ok(RawRecord {
        blog_tokens: tokens(&blog),
        comment_tokens: tokens(&comment),
        user: UserProfile {
            user_id: user_id.trim().to_string(),
            province: optional("province")?,
            city: optional("city")?,
            gender: optional("gender")?,
            marital_status: optional("marital_status")?,
            age: age_field(&obj)?,
            description_tokens: tokens(&optional("description")?),
            common_words,
        },
    })
}

/// Reads a line-delimited JSON dataset. Blank lines are skipped.
pub fn parse_dataset(path: &Path) -> Result<Vec<RawRecord>> {
    let text = fs::read_to_string(path)?;
    parse_dataset_str(&text, path)
}

pub fn parse_dataset_str(text: &str, path: &Path) -> Result<Vec<RawRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_line(l).map_err(|message| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

/// Drops records whose blog or comment has fewer than `min_tokens` tokens, then
/// drops every record of users left with fewer than `min_user_records` records.
/// Order is preserved.
pub fn filter_records(
    records: &[RawRecord],
    min_tokens: usize,
    min_user_records: usize,
) -> Vec<RawRecord> {
    let long_enough: Vec<&RawRecord> = records
        .iter()
        .filter(|r| r.blog_tokens.len() >= min_tokens && r.comment_tokens.len() >= min_tokens)
        .collect();
    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for r in &long_enough {
        *per_user.entry(r.user.user_id.as_str()).or_default() += 1;
    }
    long_enough
        .into_iter()
        .filter(|r| per_user[r.user.user_id.as_str()] >= min_user_records)
        .cloned()
        .collect()
}

/// Token ↔ id mapping with four reserved ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { tokens: v.tokens }
    }
}

impl TryFrom<VocabRepr> for Vocab {
    type Error = String;

    fn try_from(r: VocabRepr) -> std::result::Result<Self, String> {
        Vocab::from_tokens(r.tokens).map_err(|e| e.to_string())
    }
}

impl Vocab {
    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len()
            || tokens.iter().zip(RESERVED).any(|(t, r)| t != r)
        {
            return Err(Error::Data("vocabulary must start with the reserved tokens".into()));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(RESERVED[UNK], String::as_str)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Builds a vocabulary of at most `max_size` entries from blog, comment and
/// description text. Frequency descending, ties broken lexicographically.
pub fn build_vocab(train: &[RawRecord], max_size: usize) -> Result<Vocab> {
    if max_size <= RESERVED.len() {
        return Err(Error::Config(format!("vocabulary size {max_size} must exceed 4")));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in train {
        for t in r
            .blog_tokens
            .iter()
            .chain(&r.comment_tokens)
            .chain(&r.user.description_tokens)
        {
            if !RESERVED.contains(&t.as_str()) {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens = RESERVED
        .iter()
        .map(|s| s.to_string())
        .chain(ranked.into_iter().take(max_size - RESERVED.len()).map(|(t, _)| t.to_string()))
        .collect();
    Vocab::from_tokens(tokens)
}

/// One-hot layout for the categorical profile fields plus the age scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub province: Vec<String>,
    pub city: Vec<String>,
    pub gender: Vec<String>,
    pub marital_status: Vec<String>,
    pub age_divisor: f64,
}

pub const DEFAULT_AGE_DIVISOR: f64 = 100.0;

impl FeatureSchema {
    fn blocks(&self) -> [&Vec<String>; 4] {
        [&self.province, &self.city, &self.gender, &self.marital_status]
    }

    /// Total feature width: each block has an extra unknown bucket; one age slot.
    pub fn width(&self) -> usize {
        self.blocks().iter().map(|b| b.len() + 1).sum::<usize>() + 1
    }
}

/// Fits category lists (first-appearance order) on the training records.
pub fn fit_schema(train: &[RawRecord], age_divisor: f64) -> Result<FeatureSchema> {
    if train.is_empty() {
        return Err(Error::Data("cannot fit a feature schema on an empty training set".into()));
    }
    if age_divisor <= 0.0 || !age_divisor.is_finite() {
        return Err(Error::Config(format!("age divisor must be positive, got {age_divisor}")));
    }
    fn categories<'a>(values: impl Iterator<Item = &'a String>) -> Vec<String> {
        let mut seen = BTreeSet::new();
        values
            .filter(|v| !v.is_empty() && seen.insert(v.as_str()))
            .cloned()
            .collect()
    }
    Ok(FeatureSchema {
        province: categories(train.iter().map(|r| &r.user.province)),
        city: categories(train.iter().map(|r| &r.user.city)),
        gender: categories(train.iter().map(|r| &r.user.gender)),
        marital_status: categories(train.iter().map(|r| &r.user.marital_status)),
        age_divisor,
    })
}

/// Numeric feature vector: one-hot province, city, gender, marital status
/// (unknown bucket last in each block), then age / divisor (missing age → 0).
pub fn featurize_user(user: &UserProfile, schema: &FeatureSchema) -> Vec<f64> {
    let mut out = Vec::with_capacity(schema.width());
    let values = [&user.province, &user.city, &user.gender, &user.marital_status];
    for (block, value) in schema.blocks().into_iter().zip(values) {
        let hot = block.iter().position(|c| c == value).unwrap_or(block.len());
        out.extend((0..=block.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
    }
    out.push(user.age.map_or(0.0, |a| f64::from(a) / schema.age_divisor));
    out
}

/// Description followed by the first `k` common words; `[<unk>]` when both are empty.
pub fn augment_common_words(user: &UserProfile, k: usize) -> Vec<String> {
    let mut out = user.description_tokens.clone();
    out.extend(user.common_words.iter().take(k).cloned());
    if out.is_empty() {
        out.push(RESERVED[UNK].to_string());
    }
    out
}

/// Model-ready example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub user_id: String,
    /// Blog token ids.
    pub blog: Vec<usize>,
    /// Comment ids framed as `BOS … EOS`.
    pub comment: Vec<usize>,
    pub features: Vec<f64>,
    /// Description (possibly augmented) token ids; never empty.
    pub description: Vec<usize>,
}

impl EncodedExample {
    /// Number of predicted tokens (comment tokens plus EOS).
    pub fn target_len(&self) -> usize {
        self.comment.len() - 1
    }
}

/// User-side inputs of the model.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedUser {
    pub features: Vec<f64>,
    pub description: Vec<usize>,
}

pub fn encode_user(
    user: &UserProfile,
    vocab: &Vocab,
    schema: &FeatureSchema,
    common_words_k: usize,
) -> EncodedUser {
    EncodedUser {
        features: featurize_user(user, schema),
        description: vocab.encode(&augment_common_words(user, common_words_k)),
    }
}

pub fn encode_record(
    record: &RawRecord,
    vocab: &Vocab,
    schema: &FeatureSchema,
    common_words_k: usize,
) -> EncodedExample {
    let user = encode_user(&record.user, vocab, schema, common_words_k);
    let mut comment = Vec::with_capacity(record.comment_tokens.len() + 2);
    comment.push(BOS);
    comment.extend(vocab.encode(&record.comment_tokens));
    comment.push(EOS);
    EncodedExample {
        user_id: record.user.user_id.clone(),
        blog: vocab.encode(&record.blog_tokens),
        comment,
        features: user.features,
        description: user.description,
    }
}

/// Train/dev/test partition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<RawRecord>,
    pub dev: Vec<RawRecord>,
    pub test: Vec<RawRecord>,
}

/// Assigns whole blogs (keyed by exact token sequence) to splits after a
/// seeded shuffle. Each split gets at least one blog.
pub fn split_by_blog(records: &[RawRecord], ratios: (f64, f64, f64), seed: u64) -> Result<Splits> {
    let (rt, rd, rs) = ratios;
    if rt <= 0.0 || rd <= 0.0 || rs <= 0.0 || ((rt + rd + rs) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let mut keys: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for r in records {
        let k = r.blog_key();
        if seen.insert(k.clone()) {
            keys.push(k);
        }
    }
    let n = keys.len();
    if n < 3 {
        return Err(Error::Data(format!(
            "need at least 3 distinct blogs to split, found {n}"
        )));
    }
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_dev = ((rd * n as f64).round() as usize).max(1);
    let n_test = ((rs * n as f64).round() as usize).max(1);
    let n_train = n.saturating_sub(n_dev + n_test).max(1);
    let n_dev = n_dev.min(n - n_train - 1);

    #[derive(Clone, Copy)]
    enum Part {
        Train,
        Dev,
        Test,
    }
    let assignment: BTreeMap<&str, Part> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let part = if i < n_train {
                Part::Train
            } else if i < n_train + n_dev {
                Part::Dev
            } else {
                Part::Test
            };
            (k.as_str(), part)
        })
        .collect();

    let mut splits = Splits::default();
    for r in records {
        let bucket = match assignment[r.blog_key().as_str()] {
            Part::Train => &mut splits.train,
            Part::Dev => &mut splits.dev,
            Part::Test => &mut splits.test,
        };
        bucket.push(r.clone());
    }
    Ok(splits)
}

/// User / comment / blog counts of a record set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub users: usize,
    pub comments: usize,
    pub blogs: usize,
}

pub fn split_stats(records: &[RawRecord]) -> SplitStats {
    let users: BTreeSet<&str> = records.iter().map(|r| r.user.user_id.as_str()).collect();
    let blogs: BTreeSet<String> = records.iter().map(RawRecord::blog_key).collect();
    SplitStats {
        users: users.len(),
        comments: records.len(),
        blogs: blogs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(blog: &str, comment: &str, user: &str) -> RawRecord {
        RawRecord {
            blog_tokens: tokens(blog),
            comment_tokens: tokens(comment),
            user: UserProfile {
                user_id: user.into(),
                ..Default::default()
            },
        }
    }

    #[test]
    fn parses_a_full_line() {
        let line = r#"{"blog":"a b","comment":"c d","user_id":"u1","province":"P","city":"C","gender":"F","age":25,"marital_status":"single","description":"x y","common_words":["c","e"]}"#;
        let r = parse_line(line).unwrap();
        assert_eq!(r.blog_tokens, ["a", "b"]);
        assert_eq!(r.comment_tokens, ["c", "d"]);
        assert_eq!(r.user.age, Some(25));
        assert_eq!(r.user.description_tokens, ["x", "y"]);
        assert_eq!(r.user.common_words, ["c", "e"]);
        assert_eq!(parse_line(&r.to_json_line()).unwrap(), r);
    }

    #[test]
    fn missing_optional_keys_become_empty() {
        let r = parse_line(r#"{"blog":"a b","comment":"c d","user_id":"u1"}"#).unwrap();
        assert!(r.user.description_tokens.is_empty());
        assert!(r.user.common_words.is_empty());
        assert_eq!(r.user.age, None);
        assert_eq!(r.user.gender, "");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "{\"blog\":\"a b\",\"comment\":\"c d\",\"user_id\":\"u\"}\n{not json\n";
        let err = parse_dataset_str(text, Path::new("d.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let text = "{\"blog\":\"a b\",\"user_id\":\"u\"}\n";
        let err = parse_dataset_str(text, Path::new("d.jsonl")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("comment"));
            }
            other => panic!("unexpected {other}"),
        }
        assert!(parse_dataset_str("", Path::new("e")).unwrap().is_empty());
    }

    #[test]
    fn filter_rules() {
        let records = vec![
            rec("a b", "c", "u1"),
            rec("a b", "c d", "u1"),
            rec("a b", "c d", "u2"),
            rec("e f", "g h", "u2"),
        ];
        let out = filter_records(&records, 2, 2);
        assert_eq!(out, records[2..].to_vec());
        let valid = records[1..].to_vec();
        assert_eq!(filter_records(&valid, 2, 1), valid);
    }

    #[test]
    fn vocab_order_and_unknowns() {
        let v = build_vocab(&[rec("a a", "b", "u")], 6).unwrap();
        assert_eq!(v.id("a"), 4);
        assert_eq!(v.id("b"), 5);
        assert_eq!(v.id("zzz"), UNK);
        let v = build_vocab(&[rec("b", "a", "u")], 10).unwrap();
        assert_eq!(v.tokens()[4..], ["a".to_string(), "b".to_string()]);
        let v = build_vocab(&[rec("a b c d", "e", "u")], 5).unwrap();
        assert_eq!(v.len(), 5);
        assert!(build_vocab(&[], 4).is_err());
    }

    #[test]
    fn vocab_serde_round_trip() {
        let v = build_vocab(&[rec("a a b", "c", "u")], 10).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Vocab>(r#"{"tokens":["a"]}"#).is_err());
    }

    #[test]
    fn schema_and_features() {
        let mut f = rec("a b", "c d", "u1");
        f.user.gender = "F".into();
        f.user.age = Some(25);
        let mut m = rec("a b", "c d", "u2");
        m.user.gender = "M".into();
        m.user.province = "P1".into();
        let schema = fit_schema(&[f.clone(), m.clone()], DEFAULT_AGE_DIVISOR).unwrap();
        assert_eq!(schema.gender, ["F", "M"]);
        // province [P1, unk], city [unk], gender [F, M, unk], marital [unk], age
        assert_eq!(schema.width(), 2 + 1 + 3 + 1 + 1);

        let feats = featurize_user(&f.user, &schema);
        assert_eq!(&feats[3..6], &[1.0, 0.0, 0.0]);
        assert_eq!(feats[7], 0.25);

        let empty = UserProfile {
            user_id: "x".into(),
            province: "Unseen".into(),
            ..Default::default()
        };
        assert_eq!(
            featurize_user(&empty, &schema),
            vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0]
        );
        assert_eq!(featurize_user(&f.user, &schema), featurize_user(&f.user.clone(), &schema));
        assert!(fit_schema(&[], 100.0).is_err());
    }

    #[test]
    fn common_word_augmentation() {
        let mut u = UserProfile {
            user_id: "u".into(),
            description_tokens: vec!["x".into()],
            common_words: vec!["a".into(), "b".into()],
            ..Default::default()
        };
        assert_eq!(augment_common_words(&u, 20), ["x", "a", "b"]);
        assert_eq!(augment_common_words(&u, 1), ["x", "a"]);
        assert_eq!(augment_common_words(&u, 0), ["x"]);
        u.description_tokens.clear();
        u.common_words.clear();
        assert_eq!(augment_common_words(&u, 20), ["<unk>"]);
    }

    #[test]
    fn encoding_frames_comments() {
        let r = rec("a b", "c d", "u");
        let vocab = build_vocab(std::slice::from_ref(&r), 16).unwrap();
        let schema = fit_schema(std::slice::from_ref(&r), 100.0).unwrap();
        let e = encode_record(&r, &vocab, &schema, 0);
        assert_eq!(e.comment.first(), Some(&BOS));
        assert_eq!(e.comment.last(), Some(&EOS));
        assert_eq!(e.target_len(), 3);
        assert_eq!(e.description, vec![UNK]);
    }

    #[test]
    fn split_ten_blogs() {
        let records: Vec<_> = (0..10)
            .flat_map(|b| (0..3).map(move |u| rec(&format!("blog{b} x"), "c d", &format!("u{u}"))))
            .collect();
        let s = split_by_blog(&records, (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!(split_stats(&s.train).blogs, 8);
        assert_eq!(split_stats(&s.dev).blogs, 1);
        assert_eq!(split_stats(&s.test).blogs, 1);
        assert_eq!(s.train.len() + s.dev.len() + s.test.len(), records.len());
        assert_eq!(split_by_blog(&records, (0.8, 0.1, 0.1), 7).unwrap(), s);
    }

    #[test]
    fn split_rejects_bad_input() {
        let two = vec![rec("a b", "c d", "u"), rec("e f", "c d", "u")];
        assert!(matches!(split_by_blog(&two, (0.8, 0.1, 0.1), 0), Err(Error::Data(_))));
        assert!(split_by_blog(&two, (0.5, 0.1, 0.1), 0).is_err());
    }
}
