//! Command-line driver: `prepare`, `train`, `generate`, `eval` and `ablate`.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pcgn_core::load_checkpoint;

pub use config::{Overrides, RunConfig, OUTPUT_DIR_ENV};
pub use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "pcgn", version, about = "Personalized comment generation: data preparation, training, decoding and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Config file plus per-key overrides, accepted by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat `key = value` config file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let env = std::env::var(OUTPUT_DIR_ENV).ok();
        RunConfig::resolve(self.config.as_deref(), env.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Filter, split and encode a dataset (or a synthetic corpus)
    Prepare {
        #[command(flatten)]
        common: Common,
    },
    /// Train one model variant on the prepared training split
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Generate comments on a blog for one or more users
    Generate {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Blog text, whitespace-tokenized
        #[arg(long)]
        blog: String,
        /// User id from the users file (repeatable)
        #[arg(long = "user", value_name = "ID")]
        user_ids: Vec<String>,
        /// Inline JSON profile (repeatable)
        #[arg(long = "profile", value_name = "JSON")]
        profiles: Vec<String>,
        /// Users file (default: <data_dir>/users.json)
        #[arg(long, value_name = "FILE")]
        users_file: Option<PathBuf>,
        /// Also write the outputs as JSON
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint on a prepared split (PPL, BLEU-2, METEOR)
    Eval {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Write per-pair outputs as TSV
        #[arg(long, value_name = "FILE")]
        pairs: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train and score the incremental variants with a shared seed
    Ablate {
        /// Add the Seq2Seq+Emb and PCGN+ComWord rows
        #[arg(long)]
        extended: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::from(e)
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare { common } => {
            let cfg = common.resolve()?;
            let outcome = commands::prepare::run(&cfg)?;
            write!(out, "{}", outcome.report.to_table()).map_err(io_err)?;
            writeln!(out, "wrote prepared data to {}", cfg.output_dir.display()).map_err(io_err)?;
        }
        Command::Train { common } => {
            let cfg = common.resolve()?;
            let outcome = commands::train::run(&cfg, |line| {
                let _ = writeln!(out, "{line}");
            })?;
            writeln!(
                out,
                "train ppl {:.4} -> {:.4}",
                outcome.initial_train_ppl, outcome.final_train_ppl
            )
            .map_err(io_err)?;
            if let Some(dev) = outcome.best_dev_ppl {
                writeln!(out, "best dev ppl {dev:.4}").map_err(io_err)?;
            }
            writeln!(out, "final checkpoint {}", outcome.final_path.display()).map_err(io_err)?;
            writeln!(out, "best checkpoint {}", outcome.best_path.display()).map_err(io_err)?;
        }
        Command::Generate { checkpoint, blog, user_ids, profiles, users_file, json, common } => {
            let cfg = common.resolve()?;
            let users_file = users_file.unwrap_or_else(|| cfg.data_dir().join(artifacts::USERS));
            let users = commands::generate::resolve_users(&user_ids, &profiles, &users_file)?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let outputs = commands::generate::generate(&ckpt, &blog, &users, &cfg.decode())?;
            write!(out, "{}", commands::generate::side_by_side(&outputs)).map_err(io_err)?;
            if let Some(path) = json {
                artifacts::write_file(&path, &artifacts::to_pretty_json(&outputs))?;
            }
        }
        Command::Eval { checkpoint, split, pairs, common } => {
            let cfg = common.resolve()?;
            let report = commands::eval::run(&cfg, &checkpoint, &split, pairs.as_deref())?;
            write!(out, "{}", report.to_table()).map_err(io_err)?;
        }
        Command::Ablate { extended, common } => {
            let cfg = common.resolve()?;
            let report = commands::ablate::run(&cfg, extended, |line| {
                if line.starts_with("==") {
                    let _ = writeln!(out, "{line}");
                }
            })?;
            write!(out, "{}", report.to_table()).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Help and version print to `out` and exit 0; parse errors exit 1.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
