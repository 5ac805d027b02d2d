use std::path::PathBuf;

use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use asrpipe::decoder::{
    beam_search, greedy_decode, read_emissions, select_language_hypothesis, DecoderConfig,
    Hypothesis, Lexicon,
};
use asrpipe::error::{Error, Result};
use asrpipe::lm::{read_arpa, ArpaLm};
use asrpipe::manifest::{read_manifest, ManifestEntry};

use super::{emissions_path, round6};
use crate::Ctx;

#[derive(Subcommand)]
pub enum DecodeCmd {
    /// Per-frame argmax with CTC collapse.
    Greedy(GreedyArgs),
    /// Prefix beam search with optional lexicon constraint and LM fusion.
    Beam(BeamArgs),
}

#[derive(Args)]
pub struct GreedyArgs {
    /// Single emissions file.
    #[arg(long)]
    emissions: Option<PathBuf>,
    /// Directory of <stem>.ctce files matched against the manifest.
    #[arg(long)]
    emissions_dir: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct BeamArgs {
    /// Single emissions file.
    #[arg(long)]
    emissions: Option<PathBuf>,
    /// Directory of <stem>.ctce files matched against the manifest.
    #[arg(long)]
    emissions_dir: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// ARPA language model for shallow fusion.
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Lexicon file (word<TAB>tokens) constraining beam expansion.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// LM weight alpha. [default: 0.5 with --lm, 0 otherwise]
    #[arg(long)]
    lm_weight: Option<f64>,
    /// Per-word bonus beta. [default: 1.0 with --lm, 0 otherwise]
    #[arg(long)]
    word_bonus: Option<f64>,
    /// Beam width. [default: 100]
    #[arg(long)]
    beam_size: Option<usize>,
    /// Number of hypotheses to report. [default: 1]
    #[arg(long)]
    nbest: Option<usize>,
    /// Per-frame score pruning margin. [default: off]
    #[arg(long)]
    prune_threshold: Option<f64>,
    /// Prefer the hypothesis tagged with each entry's manifest language.
    #[arg(long)]
    select_lang: bool,
    /// Output format: `nbest` records or a `manifest` of selected texts.
    #[arg(long, default_value = "nbest")]
    format: String,
}

pub fn run(ctx: &Ctx, cmd: DecodeCmd) -> Result<()> {
    match cmd {
        DecodeCmd::Greedy(args) => greedy(ctx, args),
        DecodeCmd::Beam(args) => beam(ctx, args),
    }
}

fn greedy(ctx: &Ctx, args: GreedyArgs) -> Result<()> {
    match (&args.emissions, &args.emissions_dir, &args.manifest) {
        (Some(path), None, None) => {
            let em = read_emissions(path)?;
            ctx.emit(&format!("{}\n", greedy_decode(&em)))
        }
        (None, Some(dir), Some(manifest)) => {
            let entries = read_manifest(manifest)?;
            let texts = run_parallel(ctx, &entries, |entry| {
                let em = read_emissions(emissions_path(dir, &entry.audio_path)?)?;
                Ok(greedy_decode(&em))
            })?;
            let mut out = String::new();
            for (entry, text) in entries.iter().zip(texts) {
                let mut decoded = entry.clone();
                decoded.text = text;
                decoded.confidence = None;
                out.push_str(&serde_json::to_string(&decoded).expect("serializable"));
                out.push('\n');
            }
            ctx.emit(&out)
        }
        _ => Err(Error::invalid(
            "pass either --emissions, or --emissions-dir with --manifest",
        )),
    }
}

#[derive(Serialize)]
struct NbestRecord {
    audio_path: Option<String>,
    rank: usize,
    text: String,
    acoustic_logprob: f64,
    lm_log10prob: f64,
    combined_score: f64,
    token_count: usize,
    word_count: usize,
    confidence: f64,
    selected: bool,
    fallback: bool,
}

fn record(
    audio_path: Option<&str>,
    rank: usize,
    hyp: &Hypothesis,
    selected: bool,
    fallback: bool,
) -> NbestRecord {
    NbestRecord {
        audio_path: audio_path.map(str::to_owned),
        rank,
        text: hyp.text.clone(),
        acoustic_logprob: round6(hyp.acoustic_logprob),
        lm_log10prob: round6(hyp.lm_log10prob),
        combined_score: round6(hyp.combined_score),
        token_count: hyp.token_count,
        word_count: hyp.word_count,
        confidence: round6(hyp.confidence),
        selected,
        fallback,
    }
}

struct Resources {
    cfg: DecoderConfig,
    lm: Option<ArpaLm>,
    lexicon_path: Option<PathBuf>,
}

fn resources(ctx: &Ctx, args: &BeamArgs) -> Result<Resources> {
    let lm_path = ctx.path_or(&args.lm, "lm");
    let lexicon_path = ctx.path_or(&args.lexicon, "lexicon");
    let fused = lm_path.is_some();
    let cfg = DecoderConfig {
        beam_size: ctx.usize_or(args.beam_size, "beam_size", 100)?,
        lm_weight: ctx.f64_or(args.lm_weight, "lm_weight", if fused { 0.5 } else { 0.0 })?,
        word_bonus: ctx.f64_or(args.word_bonus, "word_bonus", if fused { 1.0 } else { 0.0 })?,
        use_lexicon: lexicon_path.is_some(),
        prune_log_threshold: ctx.f64_or(args.prune_threshold, "prune_threshold", f64::INFINITY)?,
        nbest: ctx.usize_or(args.nbest, "nbest", 1)?,
    };
    let lm = lm_path.map(read_arpa).transpose()?;
    Ok(Resources {
        cfg,
        lm,
        lexicon_path,
    })
}

fn beam(ctx: &Ctx, args: BeamArgs) -> Result<()> {
    let res = resources(ctx, &args)?;
    match (&args.emissions, &args.emissions_dir, &args.manifest) {
        (Some(path), None, None) => {
            let em = read_emissions(path)?;
            let lexicon = res
                .lexicon_path
                .as_ref()
                .map(|p| Lexicon::read(p, em.vocab()))
                .transpose()?;
            let hyps = beam_search(&em, &res.cfg, res.lm.as_ref(), lexicon.as_ref())?;
            let mut out = String::new();
            for (i, hyp) in hyps.iter().enumerate() {
                let rec = record(None, i + 1, hyp, i == 0, false);
                out.push_str(&serde_json::to_string(&rec).expect("serializable"));
                out.push('\n');
            }
            ctx.emit(&out)
        }
        (None, Some(dir), Some(manifest)) => {
            let entries = read_manifest(manifest)?;
            let nbests = run_parallel(ctx, &entries, |entry| {
                let em = read_emissions(emissions_path(dir, &entry.audio_path)?)?;
                let lexicon = res
                    .lexicon_path
                    .as_ref()
                    .map(|p| Lexicon::read(p, em.vocab()))
                    .transpose()?;
                beam_search(&em, &res.cfg, res.lm.as_ref(), lexicon.as_ref())
            })?;

            let mut out = String::new();
            for (entry, nbest) in entries.iter().zip(&nbests) {
                let selection = if args.select_lang {
                    Some(select_language_hypothesis(nbest, entry.lang)?)
                } else {
                    None
                };
                match args.format.as_str() {
                    "manifest" => {
                        let (hyp, _fallback) = match &selection {
                            Some(sel) => (&sel.hypothesis, sel.fallback),
                            None => (&nbest[0], false),
                        };
                        let mut decoded = entry.clone();
                        decoded.text = hyp.text.clone();
                        decoded.confidence = Some(hyp.confidence.max(f64::MIN_POSITIVE));
                        out.push_str(&serde_json::to_string(&decoded).expect("serializable"));
                        out.push('\n');
                    }
                    "nbest" => {
                        for (i, hyp) in nbest.iter().enumerate() {
                            let (selected, fallback) = match &selection {
                                Some(sel) => {
                                    let is_sel = hyp.text == sel.hypothesis.text;
                                    (is_sel, is_sel && sel.fallback)
                                }
                                None => (i == 0, false),
                            };
                            let rec =
                                record(Some(&entry.audio_path), i + 1, hyp, selected, fallback);
                            out.push_str(&serde_json::to_string(&rec).expect("serializable"));
                            out.push('\n');
                        }
                    }
                    other => {
                        return Err(Error::invalid(format!(
                            "unknown format \"{other}\", expected nbest or manifest"
                        )))
                    }
                }
            }
            ctx.emit(&out)
        }
        _ => Err(Error::invalid(
            "pass either --emissions, or --emissions-dir with --manifest",
        )),
    }
}

/// Maps entries in parallel with --jobs workers, preserving input order.
fn run_parallel<T: Send>(
    ctx: &Ctx,
    entries: &[ManifestEntry],
    f: impl Fn(&ManifestEntry) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if ctx.jobs <= 1 {
        return entries.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| entries.par_iter().map(&f).collect())
}
