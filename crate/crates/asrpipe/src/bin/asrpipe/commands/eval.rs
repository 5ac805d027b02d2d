use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::Serialize;

use asrpipe::decoder::{beam_search, read_emissions, DecoderConfig, Lexicon};
use asrpipe::error::{Error, Result};
use asrpipe::eval::{
    corpus_wer, corpus_wer_raw, lid_f1, render_sweep_csv, speed_sweep, utterance_mean_wer,
    wer_diacritic_modes, DiacriticModes, WerBreakdown, DEFAULT_SWEEP_FACTORS,
};
use asrpipe::lm::read_arpa;
use asrpipe::manifest::{read_manifest, LanguageTag};

use super::{emissions_path, parse_f64_list, read_lines, round6};
use crate::Ctx;

#[derive(Subcommand)]
pub enum EvalCmd {
    /// Pooled word error rate over line-aligned files.
    Wer(WerArgs),
    /// Per-language identification F1 from predicted/truth tag files.
    Lid(LidArgs),
    /// WER with diacritics retained vs stripped.
    Diacritics(PairArgs),
    /// Re-decode WSOLA-stretched audio across speaking rates.
    SpeedSweep(SweepArgs),
}

#[derive(Args)]
pub struct WerArgs {
    /// Reference transcripts, one per line.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Hypothesis transcripts, line-aligned with --ref.
    #[arg(long)]
    hyp: PathBuf,
    /// Score verbatim tokens without transcript preprocessing.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
pub struct PairArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    hyp: PathBuf,
}

#[derive(Args)]
pub struct LidArgs {
    /// Predicted language codes, one per line; `-` means no prediction.
    #[arg(long)]
    predicted: PathBuf,
    /// True language codes, line-aligned with --predicted.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory holding the manifest's audio. [default: manifest dir]
    #[arg(long)]
    audio_root: Option<PathBuf>,
    /// Stretch factors. [default: 0.8,1.0,1.2,1.4,1.6,1.8,2.0]
    #[arg(long)]
    factors: Option<String>,
    /// Decoder stub that echoes each reference (harness check).
    #[arg(long)]
    echo_ref: bool,
    /// Decode from precomputed per-factor emissions <stem>@<factor>.ctce.
    #[arg(long)]
    emissions_dir: Option<PathBuf>,
    /// External decoder command; `{wav}` expands to a stretched wav path.
    #[arg(long)]
    decode_cmd: Option<String>,
    #[arg(long)]
    lm: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// LM weight alpha for --emissions-dir decoding. [default: 0.5 with --lm]
    #[arg(long)]
    lm_weight: Option<f64>,
    /// Word bonus beta for --emissions-dir decoding. [default: 1.0 with --lm]
    #[arg(long)]
    word_bonus: Option<f64>,
    /// Beam width for --emissions-dir decoding. [default: 100]
    #[arg(long)]
    beam_size: Option<usize>,
}

#[derive(Serialize)]
struct WerReport {
    schema_version: u32,
    substitutions: u64,
    insertions: u64,
    deletions: u64,
    ref_words: u64,
    wer: f64,
    utterance_mean_wer: Option<f64>,
}

pub fn run(ctx: &Ctx, cmd: EvalCmd) -> Result<()> {
    match cmd {
        EvalCmd::Wer(args) => wer_cmd(ctx, args),
        EvalCmd::Lid(args) => lid_cmd(ctx, args),
        EvalCmd::Diacritics(args) => diacritics_cmd(ctx, args),
        EvalCmd::SpeedSweep(args) => sweep_cmd(ctx, args),
    }
}

fn aligned_pairs(ref_path: &Path, hyp_path: &Path) -> Result<Vec<(String, String)>> {
    let refs = read_lines(ref_path)?;
    let hyps = read_lines(hyp_path)?;
    if refs.len() != hyps.len() {
        return Err(Error::invalid(format!(
            "reference and hypothesis files must be line-aligned: {} vs {}",
            refs.len(),
            hyps.len()
        )));
    }
    Ok(refs.into_iter().zip(hyps).collect())
}

fn wer_cmd(ctx: &Ctx, args: WerArgs) -> Result<()> {
    let pairs = aligned_pairs(&args.reference, &args.hyp)?;
    let breakdown = if args.raw {
        corpus_wer_raw(&pairs)?
    } else {
        corpus_wer(&pairs)?
    };
    // headline number always on stdout
    println!("wer={:.4}", breakdown.rate());
    if ctx.out.is_some() {
        let report = WerReport {
            schema_version: 1,
            substitutions: breakdown.substitutions,
            insertions: breakdown.insertions,
            deletions: breakdown.deletions,
            ref_words: breakdown.ref_words,
            wer: round6(breakdown.rate()),
            utterance_mean_wer: if args.raw {
                None
            } else {
                Some(round6(utterance_mean_wer(&pairs)?))
            },
        };
        ctx.emit(&(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
    }
    Ok(())
}

fn lid_cmd(ctx: &Ctx, args: LidArgs) -> Result<()> {
    let predicted = read_lines(&args.predicted)?;
    let truth = read_lines(&args.truth)?;
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "predicted and truth files must be line-aligned: {} vs {}",
            predicted.len(),
            truth.len()
        )));
    }
    let mut items = Vec::with_capacity(truth.len());
    for (p, t) in predicted.iter().zip(&truth) {
        let pred = match p.trim() {
            "-" | "" => None,
            code => Some(code.parse::<LanguageTag>()?),
        };
        items.push((pred, t.trim().parse::<LanguageTag>()?));
    }
    let report = lid_f1(&items)?;
    ctx.emit(&report.render_csv())
}

#[derive(Serialize)]
struct DiacriticReport {
    schema_version: u32,
    retained: WerSlice,
    stripped: WerSlice,
}

#[derive(Serialize)]
struct WerSlice {
    substitutions: u64,
    insertions: u64,
    deletions: u64,
    ref_words: u64,
    wer: f64,
}

impl From<WerBreakdown> for WerSlice {
    fn from(b: WerBreakdown) -> Self {
        WerSlice {
            substitutions: b.substitutions,
            insertions: b.insertions,
            deletions: b.deletions,
            ref_words: b.ref_words,
            wer: round6(b.rate()),
        }
    }
}

fn diacritics_cmd(ctx: &Ctx, args: PairArgs) -> Result<()> {
    let pairs = aligned_pairs(&args.reference, &args.hyp)?;
    let DiacriticModes { retained, stripped } = wer_diacritic_modes(&pairs)?;
    let report = DiacriticReport {
        schema_version: 1,
        retained: retained.into(),
        stripped: stripped.into(),
    };
    ctx.emit(&(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))
}

fn sweep_cmd(ctx: &Ctx, args: SweepArgs) -> Result<()> {
    let entries = read_manifest(&args.manifest)?;
    let root = args.audio_root.clone().unwrap_or_else(|| {
        args.manifest
            .parent()
            .unwrap_or(std::path::Path::new("."))
            .to_path_buf()
    });
    let factors = match &args.factors {
        Some(list) => parse_f64_list(list)?,
        None => DEFAULT_SWEEP_FACTORS.to_vec(),
    };

    let modes = usize::from(args.echo_ref)
        + usize::from(args.emissions_dir.is_some())
        + usize::from(args.decode_cmd.is_some());
    if modes != 1 {
        return Err(Error::invalid(
            "pass exactly one of --echo-ref, --emissions-dir, or --decode-cmd",
        ));
    }

    let points = if args.echo_ref {
        speed_sweep(&entries, &root, &factors, |_, entry, _| Ok(entry.text.clone()))?
    } else if let Some(dir) = &args.emissions_dir {
        let lm = ctx.path_or(&args.lm, "lm").map(read_arpa).transpose()?;
        let lexicon_path = ctx.path_or(&args.lexicon, "lexicon");
        let fused = lm.is_some();
        let cfg = DecoderConfig {
            beam_size: ctx.usize_or(args.beam_size, "beam_size", 100)?,
            lm_weight: ctx.f64_or(args.lm_weight, "lm_weight", if fused { 0.5 } else { 0.0 })?,
            word_bonus: ctx.f64_or(args.word_bonus, "word_bonus", if fused { 1.0 } else { 0.0 })?,
            use_lexicon: lexicon_path.is_some(),
            prune_log_threshold: f64::INFINITY,
            nbest: 1,
        };
        speed_sweep(&entries, &root, &factors, |factor, entry, _| {
            let stem = std::path::Path::new(&entry.audio_path)
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::invalid("bad audio path"))?;
            let path = dir.join(format!("{stem}@{factor}.ctce"));
            let path = if path.exists() {
                path
            } else {
                emissions_path(dir, &entry.audio_path)?
            };
            let em = read_emissions(path)?;
            let lexicon = lexicon_path
                .as_ref()
                .map(|p| Lexicon::read(p, em.vocab()))
                .transpose()?;
            let hyps = beam_search(&em, &cfg, lm.as_ref(), lexicon.as_ref())?;
            Ok(hyps[0].text.clone())
        })?
    } else {
        let template = args.decode_cmd.clone().unwrap();
        let tmp = std::env::temp_dir();
        speed_sweep(&entries, &root, &factors, |factor, entry, wave| {
            let stem = std::path::Path::new(&entry.audio_path)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("utt");
            let wav_path = tmp.join(format!("asrpipe-sweep-{stem}-{factor}.wav"));
            asrpipe::audio::write_wav(wave, &wav_path)?;
            let cmd = template.replace("{wav}", &wav_path.display().to_string());
            let output = std::process::Command::new("sh")
                .arg("-c")
                .arg(&cmd)
                .output()
                .map_err(|e| Error::invalid(format!("decode command failed to start: {e}")))?;
            let _ = std::fs::remove_file(&wav_path);
            if !output.status.success() {
                return Err(Error::invalid(format!(
                    "decode command exited with {}",
                    output.status
                )));
            }
            Ok(String::from_utf8_lossy(&output.stdout).trim().to_string())
        })?
    };
    ctx.emit(&render_sweep_csv(&points))
}
