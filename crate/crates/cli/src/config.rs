//! Run configuration: defaults, then a flat `key = value` file, then the
//! `PCGN_OUTPUT_DIR` environment variable, then command-line flags.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pcgn_core::{ModelConfig, OptimizerConfig, Variant};
use pcgn_core::decoding::DecodeConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable overriding `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "PCGN_OUTPUT_DIR";

trait ConfigValue: Sized {
    fn parse_value(text: &str) -> Result<Self, String>;
}

fn parse_from_str<T: FromStr>(text: &str) -> Result<T, String>
where
    T::Err: Display,
{
    text.parse::<T>().map_err(|e| e.to_string())
}

impl ConfigValue for usize {
    fn parse_value(text: &str) -> Result<Self, String> {
        parse_from_str(text)
    }
}

impl ConfigValue for u64 {
    fn parse_value(text: &str) -> Result<Self, String> {
        parse_from_str(text)
    }
}

impl ConfigValue for f64 {
    fn parse_value(text: &str) -> Result<Self, String> {
        let v: f64 = parse_from_str(text)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{text:?} is not a finite number"))
        }
    }
}

impl ConfigValue for String {
    fn parse_value(text: &str) -> Result<Self, String> {
        Ok(text.to_string())
    }
}

impl ConfigValue for PathBuf {
    fn parse_value(text: &str) -> Result<Self, String> {
        if text.is_empty() {
            Err("empty path".into())
        } else {
            Ok(PathBuf::from(text))
        }
    }
}

fn is_none(text: &str) -> bool {
    matches!(text.to_ascii_lowercase().as_str(), "" | "none" | "off")
}

impl ConfigValue for Option<PathBuf> {
    fn parse_value(text: &str) -> Result<Self, String> {
        if is_none(text) {
            Ok(None)
        } else {
            PathBuf::parse_value(text).map(Some)
        }
    }
}

impl ConfigValue for Option<f64> {
    fn parse_value(text: &str) -> Result<Self, String> {
        if is_none(text) {
            Ok(None)
        } else {
            f64::parse_value(text).map(Some)
        }
    }
}

macro_rules! run_config {
    ($( $field:ident : $ty:ty = $default:expr ; $help:literal )*) => {
        /// Every setting of a run. Echoed into checkpoints and reports.
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct RunConfig {
            $( #[doc = $help] pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $field: $default, )* }
            }
        }

        impl RunConfig {
            /// Recognized keys, in documentation order.
            pub const KEYS: &'static [(&'static str, &'static str)] = &[ $( (stringify!($field), $help), )* ];

            /// Sets one key from its text form. Dashes in `key` are read as underscores.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
                let key = key.trim().replace('-', "_");
                let value = value.trim();
                match key.as_str() {
                    $( stringify!($field) => {
                        self.$field = <$ty as ConfigValue>::parse_value(value)
                            .map_err(|e| CliError::Usage(format!("invalid value for {key}: {e}")))?;
                    } )*
                    _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
                }
                Ok(())
            }
        }

        /// Flag overrides for every config key; a flag always wins.
        #[derive(clap::Args, Clone, Debug, Default)]
        pub struct Overrides {
            $( #[arg(long, value_name = "VALUE", help = $help)] pub $field: Option<String>, )*
        }

        impl Overrides {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $( if let Some(v) = &self.$field { out.push((stringify!($field), v.as_str())); } )*
                out
            }
        }
    };
}

run_config! {
    input: Option<PathBuf> = None; "Dataset file (one JSON object per line) read by prepare"
    data_dir: Option<PathBuf> = None; "Directory with prepared artifacts (default: output_dir)"
    output_dir: PathBuf = PathBuf::from("pcgn-out"); "Directory for artifacts, checkpoints and reports"
    seed: u64 = 0; "Seed for splitting, initialization, shuffling and the synthetic corpus"
    synthetic: usize = 0; "prepare: generate this many synthetic records instead of reading input"
    users: usize = 4; "prepare: number of synthetic users"
    min_tokens: usize = 1; "Minimum blog and comment length in tokens"
    min_user_records: usize = 2; "Minimum records per user after length filtering"
    train_ratio: f64 = 0.8; "Share of blogs in the training split"
    dev_ratio: f64 = 0.1; "Share of blogs in the dev split"
    test_ratio: f64 = 0.1; "Share of blogs in the test split"
    vocab_size: usize = 256; "Vocabulary size including the four reserved tokens"
    common_words: usize = 0; "Common words appended to each description (0 disables)"
    age_divisor: f64 = pcgn_core::data::DEFAULT_AGE_DIVISOR; "Age scaling divisor"
    variant: String = "pcgn".to_string(); "Model preset: seq2seq, seq2seq+emb, +mem, +coatt, pcgn"
    word_dim: usize = 16; "Word embedding width"
    hidden: usize = 32; "Blog encoder and decoder width"
    layers: usize = 1; "Blog encoder and decoder depth"
    desc_hidden: usize = 16; "Description encoder width"
    user_dim: usize = 8; "User vector width"
    learning_rate: f64 = 1.0; "SGD learning rate"
    batch_size: usize = 4; "Examples per SGD step"
    epochs: usize = 400; "Training epochs"
    clip_norm: Option<f64> = Some(5.0); "Global gradient-norm clip ('none' disables)"
    beam_size: usize = 10; "Beam width"
    max_len: usize = 20; "Maximum generated tokens"
    length_exponent: f64 = 0.0; "Length-normalization exponent (0 disables)"
}

impl RunConfig {
    /// Applies a `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, path)
    }

    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1))
            })?;
            self.set(key, value).map_err(|e| {
                CliError::Usage(format!("{}:{}: {}", path.display(), i + 1, e.message()))
            })?;
        }
        Ok(())
    }

    /// Layers the file, the environment override and the flags over the defaults.
    pub fn resolve(
        file: Option<&Path>,
        env_output_dir: Option<&str>,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        if let Some(dir) = env_output_dir.filter(|d| !d.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
        for (key, value) in overrides.pairs() {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.variant()?;
        self.optimizer().validate()?;
        self.decode().validate()?;
        Ok(())
    }

    pub fn data_dir(&self) -> &Path {
        self.data_dir.as_deref().unwrap_or(&self.output_dir)
    }

    pub fn variant(&self) -> Result<Variant, CliError> {
        Ok(self.variant.parse::<Variant>()?)
    }

    pub fn model_config(&self, vocab_size: usize, feature_dim: usize) -> Result<ModelConfig, CliError> {
        let cfg = ModelConfig {
            vocab_size,
            word_dim: self.word_dim,
            hidden: self.hidden,
            layers: self.layers,
            desc_hidden: self.desc_hidden,
            user_dim: self.user_dim,
            feature_dim,
            variant: self.variant()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            clip_norm: self.clip_norm,
            seed: self.seed,
        }
    }

    pub fn decode(&self) -> DecodeConfig {
        DecodeConfig {
            beam_size: self.beam_size,
            max_len: self.max_len,
            length_exponent: self.length_exponent,
            early_stop: true,
        }
    }

    pub fn split_ratios(&self) -> (f64, f64, f64) {
        (self.train_ratio, self.dev_ratio, self.test_ratio)
    }

    /// The config as a `key = value` file that [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (key, _) in Self::KEYS {
            let text = match &value[*key] {
                serde_json::Value::Null => "none".to_string(),
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{key} = {text}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_desk_preset() {
        let cfg = RunConfig::default();
        let m = cfg.model_config(50, 7).unwrap();
        assert_eq!(m, ModelConfig::desk(50, 7, Variant::PCGN));
        assert_eq!(cfg.optimizer(), OptimizerConfig::desk());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn file_then_env_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "# desk run\nepochs = 7\nvariant = seq2seq\noutput_dir = from-file\nclip_norm = none\n",
        )
        .unwrap();
        let flags = Overrides {
            epochs: Some("9".into()),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some(&path), Some("from-env"), &flags).unwrap();
        assert_eq!(cfg.epochs, 9);
        assert_eq!(cfg.variant, "seq2seq");
        assert_eq!(cfg.output_dir, PathBuf::from("from-env"));
        assert_eq!(cfg.clip_norm, None);

        let flags = Overrides {
            output_dir: Some("from-flag".into()),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some(&path), Some("from-env"), &flags).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("from-flag"));
    }

    #[test]
    fn bad_keys_and_values_are_usage_errors() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.set("nope", "1"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.set("epochs", "many"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.set("learning-rate", "nan"), Err(CliError::Usage(_))));
        cfg.set("learning-rate", "0.5").unwrap();
        assert_eq!(cfg.learning_rate, 0.5);
        let err = cfg.apply_text("epochs 3\n", Path::new("x.cfg")).unwrap_err();
        assert!(err.message().contains("x.cfg:1"));
        cfg.variant = "bogus".into();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn text_form_round_trips() {
        let cfg = RunConfig {
            input: Some(PathBuf::from("data/sample.jsonl")),
            variant: "+coatt".into(),
            clip_norm: None,
            ..RunConfig::default()
        };
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), Path::new("echo")).unwrap();
        assert_eq!(back, cfg);
    }
}
