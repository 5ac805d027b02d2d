use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rand::Rng;
use serde::Serialize;

use asrpipe::audio::{
    detect_silence, merge_by_embedding, merge_vad_segments, mix_noise, read_embeddings, read_wav,
    split_long_segment, write_wav, wsola_stretch, FrameParams, Segment,
};
use asrpipe::error::{Error, Result};
use asrpipe::manifest::read_manifest;

use super::{parse_f64_list, round6};
use crate::Ctx;

#[derive(Subcommand)]
pub enum AudioCmd {
    /// Detect silence runs below an RMS threshold.
    Silence(SilenceArgs),
    /// Merge VAD segments across small gaps, or group by embedding.
    Merge(MergeArgs),
    /// Split long segments at quiet points.
    Split(SplitArgs),
    /// WSOLA time stretch (single file or seeded batch).
    Stretch(StretchArgs),
    /// Mix noise at a target SNR (single file or seeded batch).
    MixNoise(MixNoiseArgs),
}

#[derive(Args)]
pub struct SilenceArgs {
    #[arg(long)]
    wav: PathBuf,
    /// RMS threshold in dBFS. [default: -50]
    #[arg(long)]
    threshold_db: Option<f64>,
    /// Analysis frame length in ms. [default: 25]
    #[arg(long)]
    frame_ms: Option<f64>,
    /// Analysis hop in ms. [default: 10]
    #[arg(long)]
    hop_ms: Option<f64>,
    /// Minimum silence run to report, seconds. [default: 0.3]
    #[arg(long)]
    min_silence: Option<f64>,
}

#[derive(Args)]
pub struct MergeArgs {
    /// Segment list (JSONL).
    #[arg(long)]
    segments: PathBuf,
    /// Merge gaps strictly below this many seconds. [default: 1.5]
    #[arg(long)]
    max_gap: Option<f64>,
    /// Packed embeddings aligned with the segments; switches to
    /// similarity grouping.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Cosine similarity that must be strictly exceeded to group.
    /// [default: 0.7]
    #[arg(long)]
    similarity: Option<f64>,
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    wav: PathBuf,
    /// Segments to split (JSONL); the whole file when omitted.
    #[arg(long)]
    segments: Option<PathBuf>,
    /// Maximum piece length in seconds. [default: 30]
    #[arg(long)]
    max_len: Option<f64>,
    /// Silence threshold in dBFS for cut points. [default: -50]
    #[arg(long)]
    threshold_db: Option<f64>,
}

#[derive(Args)]
pub struct StretchArgs {
    /// Single input file.
    #[arg(long)]
    wav: Option<PathBuf>,
    /// Stretch factor for --wav. [default: 1.0]
    #[arg(long)]
    factor: Option<f64>,
    /// Output path for --wav.
    #[arg(long)]
    out_wav: Option<PathBuf>,
    /// Batch mode: manifest of utterances.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory holding the manifest's audio. [default: manifest dir]
    #[arg(long)]
    audio_root: Option<PathBuf>,
    /// Factor set to draw from in batch mode. [default: 0.9,1.0,1.1,1.2]
    #[arg(long)]
    factors: Option<String>,
    /// Probability an utterance is stretched in batch mode. [default: 0.4]
    #[arg(long)]
    prob: Option<f64>,
    /// Output directory for batch mode.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct MixNoiseArgs {
    /// Single input file.
    #[arg(long)]
    wav: Option<PathBuf>,
    /// Noise file, looped or truncated to the signal length.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Fixed target SNR in dB for --wav. [default: drawn from --snr-range]
    #[arg(long)]
    snr: Option<f64>,
    /// Inclusive SNR range for random draws. [default: 5,30]
    #[arg(long)]
    snr_range: Option<String>,
    /// Output path for --wav.
    #[arg(long)]
    out_wav: Option<PathBuf>,
    /// Batch mode: manifest of utterances.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory holding the manifest's audio. [default: manifest dir]
    #[arg(long)]
    audio_root: Option<PathBuf>,
    /// Probability an utterance gets noise in batch mode. [default: 0.4]
    #[arg(long)]
    prob: Option<f64>,
    /// Output directory for batch mode.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, cmd: AudioCmd) -> Result<()> {
    match cmd {
        AudioCmd::Silence(args) => silence(ctx, args),
        AudioCmd::Merge(args) => merge(ctx, args),
        AudioCmd::Split(args) => split(ctx, args),
        AudioCmd::Stretch(args) => stretch(ctx, args),
        AudioCmd::MixNoise(args) => mix(ctx, args),
    }
}

fn frames(ctx: &Ctx, frame_ms: Option<f64>, hop_ms: Option<f64>) -> Result<FrameParams> {
    Ok(FrameParams {
        frame_ms: ctx.f64_or(frame_ms, "frame_ms", 25.0)?,
        hop_ms: ctx.f64_or(hop_ms, "hop_ms", 10.0)?,
    })
}

fn segments_jsonl(segments: &[Segment]) -> String {
    let mut out = String::new();
    for seg in segments {
        let rounded = Segment {
            start_s: round6(seg.start_s),
            end_s: round6(seg.end_s),
            embedding: None,
        };
        out.push_str(&serde_json::to_string(&rounded).expect("serializable"));
        out.push('\n');
    }
    out
}

fn silence(ctx: &Ctx, args: SilenceArgs) -> Result<()> {
    let w = read_wav(&args.wav)?;
    let segs = detect_silence(
        &w,
        ctx.f64_or(args.threshold_db, "threshold_db", -50.0)?,
        frames(ctx, args.frame_ms, args.hop_ms)?,
        ctx.f64_or(args.min_silence, "min_silence", 0.3)?,
    );
    ctx.emit(&segments_jsonl(&segs))
}

fn merge(ctx: &Ctx, args: MergeArgs) -> Result<()> {
    let segments = asrpipe::audio::read_segments(&args.segments)?;
    match &args.embeddings {
        None => {
            let merged =
                merge_vad_segments(&segments, ctx.f64_or(args.max_gap, "max_gap", 1.5)?)?;
            ctx.emit(&segments_jsonl(&merged))
        }
        Some(path) => {
            let vectors = read_embeddings(path)?;
            if vectors.len() != segments.len() {
                return Err(Error::invalid(format!(
                    "{} embeddings for {} segments",
                    vectors.len(),
                    segments.len()
                )));
            }
            let with_emb: Vec<Segment> = segments
                .into_iter()
                .zip(vectors)
                .map(|(mut s, e)| {
                    s.embedding = Some(e);
                    s
                })
                .collect();
            let groups =
                merge_by_embedding(&with_emb, ctx.f64_or(args.similarity, "similarity", 0.7)?)?;
            let mut out = String::new();
            for (i, group) in groups.iter().enumerate() {
                for seg in group {
                    out.push_str(&format!(
                        "{{\"group\":{i},\"start_s\":{},\"end_s\":{}}}\n",
                        round6(seg.start_s),
                        round6(seg.end_s)
                    ));
                }
            }
            ctx.emit(&out)
        }
    }
}

fn split(ctx: &Ctx, args: SplitArgs) -> Result<()> {
    let w = read_wav(&args.wav)?;
    let max_len = ctx.f64_or(args.max_len, "max_len", 30.0)?;
    let threshold = ctx.f64_or(args.threshold_db, "threshold_db", -50.0)?;
    let inputs = match &args.segments {
        Some(path) => asrpipe::audio::read_segments(path)?,
        None => vec![Segment::new(0.0, w.duration_s())?],
    };
    let mut out = Vec::new();
    for seg in &inputs {
        out.extend(split_long_segment(&w, seg, max_len, threshold, FrameParams::default()));
    }
    ctx.emit(&segments_jsonl(&out))
}

fn resolve_root(manifest: &Path, root: &Option<PathBuf>) -> PathBuf {
    root.clone()
        .unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).to_path_buf())
}

fn resolve_audio(root: &Path, audio_path: &str) -> PathBuf {
    let p = Path::new(audio_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

#[derive(Serialize)]
struct StretchItem {
    audio_path: String,
    applied: bool,
    factor: f64,
    output: Option<String>,
}

#[derive(Serialize)]
struct StretchReport {
    schema_version: u32,
    seed: u64,
    items: Vec<StretchItem>,
}

fn stretch(ctx: &Ctx, args: StretchArgs) -> Result<()> {
    match (&args.wav, &args.manifest) {
        (Some(wav), None) => {
            let out_wav = args
                .out_wav
                .as_ref()
                .ok_or_else(|| Error::invalid("--out-wav required with --wav"))?;
            let factor = ctx.f64_or(args.factor, "factor", 1.0)?;
            let stretched = wsola_stretch(&read_wav(wav)?, factor)?;
            write_wav(&stretched, out_wav)?;
            ctx.emit(&format!(
                "stretched factor={factor} duration_s={:.3}\n",
                stretched.duration_s()
            ))
        }
        (None, Some(manifest)) => {
            let out_dir = args
                .out_dir
                .as_ref()
                .ok_or_else(|| Error::invalid("--out-dir required with --manifest"))?;
            std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
            let factors = match &args.factors {
                Some(list) => parse_f64_list(list)?,
                None => vec![0.9, 1.0, 1.1, 1.2],
            };
            let prob = ctx.f64_or(args.prob, "stretch_prob", 0.4)?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::invalid("probability must lie in [0, 1]"));
            }
            let root = resolve_root(manifest, &args.audio_root);
            let entries = read_manifest(manifest)?;
            let mut items = Vec::new();
            for (idx, entry) in entries.iter().enumerate() {
                let mut rng = ctx.item_rng(idx as u64);
                let applied = rng.gen_bool(prob);
                let factor = if applied {
                    factors[rng.gen_range(0..factors.len())]
                } else {
                    1.0
                };
                let input = resolve_audio(&root, &entry.audio_path);
                let output = if factor != 1.0 {
                    let w = wsola_stretch(&read_wav(&input)?, factor)?;
                    let name = Path::new(&entry.audio_path)
                        .file_name()
                        .and_then(|s| s.to_str())
                        .unwrap_or("out.wav");
                    let out_path = out_dir.join(name);
                    write_wav(&w, &out_path)?;
                    Some(out_path.display().to_string())
                } else {
                    None
                };
                items.push(StretchItem {
                    audio_path: entry.audio_path.clone(),
                    applied: factor != 1.0,
                    factor,
                    output,
                });
            }
            let report = StretchReport {
                schema_version: 1,
                seed: ctx.seed,
                items,
            };
            ctx.emit(&(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))
        }
        _ => Err(Error::invalid("pass exactly one of --wav or --manifest")),
    }
}

#[derive(Serialize)]
struct MixItem {
    audio_path: String,
    applied: bool,
    snr_db: Option<f64>,
    clipped_samples: usize,
    output: Option<String>,
}

#[derive(Serialize)]
struct MixReport {
    schema_version: u32,
    seed: u64,
    items: Vec<MixItem>,
}

fn snr_range(ctx: &Ctx, spec: &Option<String>) -> Result<(f64, f64)> {
    let raw = match spec {
        Some(s) => s.clone(),
        None => ctx
            .config
            .get_str("snr_range")
            .unwrap_or("5,30")
            .to_string(),
    };
    let values = parse_f64_list(&raw)?;
    if values.len() != 2 || values[0] > values[1] {
        return Err(Error::invalid("snr-range must be min,max with min <= max"));
    }
    Ok((values[0], values[1]))
}

fn mix(ctx: &Ctx, args: MixNoiseArgs) -> Result<()> {
    let noise_path = args
        .noise
        .clone()
        .or_else(|| ctx.config.get_path("noise"))
        .ok_or_else(|| Error::invalid("--noise required"))?;
    let noise = read_wav(&noise_path)?;
    match (&args.wav, &args.manifest) {
        (Some(wav), None) => {
            let out_wav = args
                .out_wav
                .as_ref()
                .ok_or_else(|| Error::invalid("--out-wav required with --wav"))?;
            let snr = match args.snr {
                Some(v) => v,
                None => {
                    let (lo, hi) = snr_range(ctx, &args.snr_range)?;
                    ctx.item_rng(0).gen_range(lo..=hi)
                }
            };
            let mixed = mix_noise(&read_wav(wav)?, &noise, snr)?;
            write_wav(&mixed.waveform, out_wav)?;
            ctx.emit(&format!(
                "mixed snr_db={:.2} clipped_samples={}\n",
                snr, mixed.clipped_samples
            ))
        }
        (None, Some(manifest)) => {
            let out_dir = args
                .out_dir
                .as_ref()
                .ok_or_else(|| Error::invalid("--out-dir required with --manifest"))?;
            std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
            let prob = ctx.f64_or(args.prob, "noise_prob", 0.4)?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(Error::invalid("probability must lie in [0, 1]"));
            }
            let (lo, hi) = snr_range(ctx, &args.snr_range)?;
            let root = resolve_root(manifest, &args.audio_root);
            let entries = read_manifest(manifest)?;
            let mut items = Vec::new();
            for (idx, entry) in entries.iter().enumerate() {
                let mut rng = ctx.item_rng(idx as u64);
                let applied = rng.gen_bool(prob);
                let snr = rng.gen_range(lo..=hi);
                let (snr_db, clipped, output) = if applied {
                    let input = resolve_audio(&root, &entry.audio_path);
                    let mixed = mix_noise(&read_wav(&input)?, &noise, snr)?;
                    let name = Path::new(&entry.audio_path)
                        .file_name()
                        .and_then(|s| s.to_str())
                        .unwrap_or("out.wav");
                    let out_path = out_dir.join(name);
                    write_wav(&mixed.waveform, &out_path)?;
                    (
                        Some(round6(snr)),
                        mixed.clipped_samples,
                        Some(out_path.display().to_string()),
                    )
                } else {
                    (None, 0, None)
                };
                items.push(MixItem {
                    audio_path: entry.audio_path.clone(),
                    applied,
                    snr_db,
                    clipped_samples: clipped,
                    output,
                });
            }
            let report = MixReport {
                schema_version: 1,
                seed: ctx.seed,
                items,
            };
            ctx.emit(&(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))
        }
        _ => Err(Error::invalid("pass exactly one of --wav or --manifest")),
    }
}
