use std::path::PathBuf;

use clap::{Args, Subcommand};

use asrpipe::error::{Error, Result};
use asrpipe::manifest::{read_manifest, ManifestEntry};
use asrpipe::pipeline::{
    filter_by_confidence, filter_language_mismatch, run_stage, DropReason, FilterPolicy,
};

use crate::Ctx;

#[derive(Subcommand)]
pub enum FilterCmd {
    /// Keep entries meeting per-language confidence thresholds.
    Confidence(ConfidenceArgs),
    /// Drop entries whose emitted language tag mismatches the manifest.
    Language(LanguageArgs),
    /// Both filters plus a JSON report.
    Stage(StageArgs),
}

#[derive(Args)]
pub struct ConfidenceArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Threshold file with lang=threshold lines.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Keep entries that carry no confidence score.
    #[arg(long)]
    keep_unscored: bool,
    /// Write dropped entries (with reasons) here.
    #[arg(long)]
    dropped: Option<PathBuf>,
}

#[derive(Args)]
pub struct LanguageArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Also drop entries whose text carries no tag at all.
    #[arg(long)]
    drop_untagged: bool,
    #[arg(long)]
    dropped: Option<PathBuf>,
}

#[derive(Args)]
pub struct StageArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    thresholds: Option<PathBuf>,
    #[arg(long)]
    keep_unscored: bool,
    #[arg(long)]
    drop_untagged: bool,
    /// Write the JSON report here (stdout when --out takes the manifest).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    dropped: Option<PathBuf>,
}

fn policy(ctx: &Ctx, thresholds: &Option<PathBuf>, keep_unscored: bool, drop_untagged: bool) -> Result<FilterPolicy> {
    let mut policy = FilterPolicy {
        keep_unscored,
        drop_untagged,
        ..FilterPolicy::default()
    };
    if let Some(path) = ctx.path_or(thresholds, "thresholds") {
        policy.thresholds = FilterPolicy::read_thresholds(path)?;
    } else {
        // no thresholds configured: default 0.0 for every language
        for lang in asrpipe::manifest::LanguageTag::ALL {
            policy.thresholds.insert(lang, 0.0);
        }
    }
    policy.validate()?;
    Ok(policy)
}

fn manifest_lines(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).expect("serializable"));
        out.push('\n');
    }
    out
}

fn write_dropped(path: &Option<PathBuf>, dropped: &[(ManifestEntry, DropReason)]) -> Result<()> {
    let Some(path) = path else {
        return Ok(());
    };
    let mut out = String::new();
    for (entry, reason) in dropped {
        let mut value = serde_json::to_value(entry).expect("serializable");
        value["drop_reason"] = serde_json::to_value(reason).expect("serializable");
        out.push_str(&value.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn run(ctx: &Ctx, cmd: FilterCmd) -> Result<()> {
    match cmd {
        FilterCmd::Confidence(args) => {
            let entries = read_manifest(&args.manifest)?;
            let policy = policy(ctx, &args.thresholds, args.keep_unscored, false)?;
            let (kept, dropped) = filter_by_confidence(entries, &policy)?;
            write_dropped(&args.dropped, &dropped)?;
            ctx.emit(&manifest_lines(&kept))
        }
        FilterCmd::Language(args) => {
            let entries = read_manifest(&args.manifest)?;
            let (kept, dropped) = filter_language_mismatch(entries, args.drop_untagged);
            write_dropped(&args.dropped, &dropped)?;
            ctx.emit(&manifest_lines(&kept))
        }
        FilterCmd::Stage(args) => {
            let entries = read_manifest(&args.manifest)?;
            let policy = policy(ctx, &args.thresholds, args.keep_unscored, args.drop_untagged)?;
            let outcome = run_stage(entries, &policy)?;
            write_dropped(&args.dropped, &outcome.dropped)?;
            let report =
                serde_json::to_string_pretty(&outcome.report).expect("serializable") + "\n";
            match &args.report {
                Some(path) => std::fs::write(path, &report).map_err(|e| Error::io(path, e))?,
                None => print!("{report}"),
            }
            ctx.emit(&manifest_lines(&outcome.kept))
        }
    }
}
