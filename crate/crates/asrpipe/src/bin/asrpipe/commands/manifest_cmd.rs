use std::path::PathBuf;

use clap::{Args, Subcommand};

use asrpipe::error::Result;
use asrpipe::manifest::ManifestReader;

use crate::Ctx;

#[derive(Subcommand)]
pub enum ManifestCmd {
    /// Check every line parses and satisfies the record invariants.
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    manifest: PathBuf,
}

pub fn run(ctx: &Ctx, cmd: ManifestCmd) -> Result<()> {
    let ManifestCmd::Validate(args) = cmd;
    let mut entries = 0usize;
    let mut total_duration = 0.0;
    for entry in ManifestReader::open(&args.manifest)? {
        let entry = entry?;
        entries += 1;
        total_duration += entry.duration_s;
    }
    ctx.emit(&format!(
        "ok entries={entries} hours={:.3}\n",
        total_duration / 3600.0
    ))
}
