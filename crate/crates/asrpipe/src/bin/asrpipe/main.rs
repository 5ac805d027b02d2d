//! Single-binary CLI exposing every pipeline stage: LM training/scoring,
//! CTC decoding, text normalization, pseudo-label filtering, sampling
//! weights, audio processing, and evaluation.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 64 usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use asrpipe::config::Config;
use asrpipe::error::{Error, Result};

#[derive(Parser)]
#[command(name = "asrpipe", version, about = "ASR pseudo-labelling pipeline toolkit")]
struct Cli {
    /// Key-value config file; explicit flags override config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every stochastic choice (augmentation draws). [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for batch subcommands; output order is always input
    /// order. [default: 1]
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Noun,
}

#[derive(Subcommand)]
enum Noun {
    /// N-gram language models: train, perplexity, score.
    #[command(subcommand)]
    Lm(commands::lm::LmCmd),
    /// CTC decoding over precomputed emissions.
    #[command(subcommand)]
    Decode(commands::decode::DecodeCmd),
    /// Text normalization and variant mining.
    #[command(subcommand)]
    Norm(commands::norm::NormCmd),
    /// Pseudo-label filtering.
    #[command(subcommand)]
    Filter(commands::filter::FilterCmd),
    /// Data-mixing weights.
    #[command(subcommand)]
    Mix(commands::mix::MixCmd),
    /// Audio segmentation and augmentation.
    #[command(subcommand)]
    Audio(commands::audio::AudioCmd),
    /// Metrics and robustness harnesses.
    #[command(subcommand)]
    Eval(commands::eval::EvalCmd),
    /// Manifest utilities.
    #[command(subcommand)]
    Manifest(commands::manifest_cmd::ManifestCmd),
}

/// Shared context resolved from global flags plus the config file.
pub struct Ctx {
    pub config: Config,
    pub seed: u64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
}

impl Ctx {
    /// Writes the primary output to --out, or prints it.
    pub fn emit(&self, content: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, content).map_err(|e| Error::io(path, e)),
            None => {
                print!("{content}");
                if !content.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    pub fn f64_or(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64> {
        Ok(match flag {
            Some(v) => v,
            None => self.config.get_parsed(key)?.unwrap_or(default),
        })
    }

    pub fn usize_or(&self, flag: Option<usize>, key: &str, default: usize) -> Result<usize> {
        Ok(match flag {
            Some(v) => v,
            None => self.config.get_parsed(key)?.unwrap_or(default),
        })
    }

    pub fn path_or(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.config.get_path(key))
    }

    pub fn require_path(&self, flag: &Option<PathBuf>, key: &str, what: &str) -> Result<PathBuf> {
        self.path_or(flag, key)
            .ok_or_else(|| Error::invalid(format!("{what} required: pass --{key} or set {key} in the config")))
    }

    /// Deterministic per-item RNG stream, independent of worker count.
    pub fn item_rng(&self, index: u64) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(
            self.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )
    }
}

fn build_ctx(cli: &Cli) -> Result<Ctx> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::empty(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_parsed("seed")?.unwrap_or(0),
    };
    let jobs = match cli.jobs {
        Some(j) => j.max(1),
        None => config.get_parsed("jobs")?.unwrap_or(1),
    };
    Ok(Ctx {
        config,
        seed,
        jobs,
        out: cli.out.clone(),
    })
}

fn run(cli: Cli) -> Result<()> {
    let ctx = build_ctx(&cli)?;
    match cli.command {
        Noun::Lm(cmd) => commands::lm::run(&ctx, cmd),
        Noun::Decode(cmd) => commands::decode::run(&ctx, cmd),
        Noun::Norm(cmd) => commands::norm::run(&ctx, cmd),
        Noun::Filter(cmd) => commands::filter::run(&ctx, cmd),
        Noun::Mix(cmd) => commands::mix::run(&ctx, cmd),
        Noun::Audio(cmd) => commands::audio::run(&ctx, cmd),
        Noun::Eval(cmd) => commands::eval::run(&ctx, cmd),
        Noun::Manifest(cmd) => commands::manifest_cmd::run(&ctx, cmd),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                ErrorKind::InvalidSubcommand | ErrorKind::UnknownArgument => 64,
                _ => 1,
            };
            eprint!("{e}");
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
