use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use asrpipe::error::{Error, Result};
use asrpipe::manifest::read_manifest;
use asrpipe::pipeline::{temperature_weights, MixSpec};

use super::parse_kv_list;
use crate::Ctx;

#[derive(Subcommand)]
pub enum MixCmd {
    /// Temperature sampling weights from counts or a manifest.
    Weights(WeightsArgs),
}

#[derive(Args)]
pub struct WeightsArgs {
    /// Explicit counts, e.g. a=900,b=100.
    #[arg(long)]
    counts: Option<String>,
    /// Derive counts from a manifest instead.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Count basis for --manifest: duration (hours of audio) or utterances.
    #[arg(long, default_value = "duration")]
    by: String,
    /// Sampling temperature. [default: 20]
    #[arg(long)]
    temperature: Option<f64>,
}

pub fn run(ctx: &Ctx, cmd: MixCmd) -> Result<()> {
    let MixCmd::Weights(args) = cmd;
    let counts: BTreeMap<String, f64> = match (&args.counts, &args.manifest) {
        (Some(list), None) => parse_kv_list(list)?.into_iter().collect(),
        (None, Some(path)) => {
            let mut counts: BTreeMap<String, f64> = BTreeMap::new();
            for entry in read_manifest(path)? {
                let slot = counts.entry(entry.lang.code().to_string()).or_insert(0.0);
                match args.by.as_str() {
                    "duration" => *slot += entry.duration_s,
                    "utterances" => *slot += 1.0,
                    other => {
                        return Err(Error::invalid(format!(
                            "unknown basis \"{other}\", expected duration or utterances"
                        )))
                    }
                }
            }
            counts
        }
        _ => return Err(Error::invalid("pass exactly one of --counts or --manifest")),
    };
    let spec = MixSpec {
        counts,
        temperature: ctx.f64_or(args.temperature, "temperature", 20.0)?,
    };
    let weights = temperature_weights(&spec)?;
    let mut out = String::new();
    for (key, w) in &weights {
        out.push_str(&format!("{key}={w:.6}\n"));
    }
    ctx.emit(&out)
}
