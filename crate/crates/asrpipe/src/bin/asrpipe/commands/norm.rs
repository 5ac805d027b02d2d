use std::path::PathBuf;

use clap::{Args, Subcommand};

use asrpipe::error::{Error, Result};
use asrpipe::lm::read_arpa;
use asrpipe::textnorm::{
    apply_variants, dedup_and_filter, disambiguate_homophones, mine_variants, preprocess,
    strip_diacritics, HomophoneSets, VariantTable,
};

use super::read_lines;
use crate::Ctx;

#[derive(Subcommand)]
pub enum NormCmd {
    /// Lowercase, strip punctuation (apostrophes/dashes kept), spell digits.
    Preprocess(TextArgs),
    /// Longest-match variant-table replacement.
    Variants(VariantsArgs),
    /// LM-scored homophone disambiguation.
    Homophones(HomophonesArgs),
    /// Mine substitution candidates from reference/hypothesis pairs.
    Mine(MineArgs),
    /// Deduplicate a corpus and drop heldout collisions.
    Dedup(DedupArgs),
    /// Remove diacritical marks.
    StripDiacritics(TextArgs),
}

#[derive(Args)]
pub struct TextArgs {
    /// Input file, one text per line.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Single text.
    #[arg(long)]
    text: Option<String>,
    /// Keep digit runs as digits instead of spelling them out.
    #[arg(long)]
    no_spell_digits: bool,
}

#[derive(Args)]
pub struct VariantsArgs {
    /// Variant table (source<TAB>replacement per line).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    text: Option<String>,
    /// Normalize manifest entry texts instead of raw lines.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// With --manifest, only touch entries of this language.
    #[arg(long)]
    lang: Option<String>,
}

#[derive(Args)]
pub struct HomophonesArgs {
    /// Homophone sets file (one set per line, members separated by |).
    #[arg(long)]
    sets: Option<PathBuf>,
    /// ARPA model used to score candidates.
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Context window in words on each side. [default: 4]
    #[arg(long)]
    window: Option<usize>,
    /// Score whole sentences instead of a window.
    #[arg(long)]
    full_sentence: bool,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    text: Option<String>,
    /// Normalize manifest entry texts instead of raw lines.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// With --manifest, only touch entries of this language.
    #[arg(long)]
    lang: Option<String>,
}

#[derive(Args)]
pub struct MineArgs {
    /// Reference transcripts, one per line.
    #[arg(long)]
    refs: PathBuf,
    /// Hypothesis transcripts, line-aligned with --refs.
    #[arg(long)]
    hyps: PathBuf,
    /// Minimum pair count to report. [default: 2]
    #[arg(long)]
    min_count: Option<usize>,
}

#[derive(Args)]
pub struct DedupArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Lines whose preprocessed form appears here are dropped.
    #[arg(long)]
    heldout: Option<PathBuf>,
}

fn input_lines(input: &Option<PathBuf>, text: &Option<String>) -> Result<Vec<String>> {
    match (input, text) {
        (Some(path), None) => read_lines(path),
        (None, Some(t)) => Ok(vec![t.clone()]),
        _ => Err(Error::invalid("pass exactly one of --in or --text")),
    }
}

/// Applies `transform` to manifest entry texts, restricted to `lang` when
/// given. A leading language tag is left in place and the remainder
/// transformed.
fn rewrite_manifest(
    ctx: &Ctx,
    manifest: &PathBuf,
    lang: &Option<String>,
    transform: impl Fn(&str) -> String,
) -> Result<()> {
    use asrpipe::manifest::{read_manifest, strip_language_tag, LanguageTag};
    let only: Option<LanguageTag> = lang.as_deref().map(str::parse).transpose()?;
    let mut out = String::new();
    for mut entry in read_manifest(manifest)? {
        if only.is_none_or(|l| l == entry.lang) {
            entry.text = match strip_language_tag(&entry.text) {
                (Some(tag), rest) => format!("{} {}", tag.token(), transform(rest)),
                (None, text) => transform(text),
            };
        }
        out.push_str(&serde_json::to_string(&entry).expect("serializable"));
        out.push('\n');
    }
    ctx.emit(&out)
}

pub fn run(ctx: &Ctx, cmd: NormCmd) -> Result<()> {
    match cmd {
        NormCmd::Preprocess(args) => {
            let lines = input_lines(&args.input, &args.text)?;
            let out: Vec<String> = lines
                .iter()
                .map(|l| preprocess(l, !args.no_spell_digits))
                .collect();
            ctx.emit(&(out.join("\n") + "\n"))
        }
        NormCmd::Variants(args) => {
            let table_path = ctx.require_path(&args.table, "table", "a variant table")?;
            let table = VariantTable::read(table_path)?;
            if let Some(manifest) = &args.manifest {
                return rewrite_manifest(ctx, manifest, &args.lang, |t| {
                    apply_variants(t, &table)
                });
            }
            let lines = input_lines(&args.input, &args.text)?;
            let out: Vec<String> = lines.iter().map(|l| apply_variants(l, &table)).collect();
            ctx.emit(&(out.join("\n") + "\n"))
        }
        NormCmd::Homophones(args) => {
            let sets_path = ctx.require_path(&args.sets, "sets", "a homophone sets file")?;
            let lm_path = ctx.require_path(&args.lm, "lm", "an ARPA model")?;
            let sets = HomophoneSets::read(sets_path)?;
            let lm = read_arpa(lm_path)?;
            let window = if args.full_sentence {
                usize::MAX / 2
            } else {
                ctx.usize_or(args.window, "window", 4)?
            };
            if let Some(manifest) = &args.manifest {
                return rewrite_manifest(ctx, manifest, &args.lang, |t| {
                    disambiguate_homophones(t, &sets, &lm, window)
                });
            }
            let lines = input_lines(&args.input, &args.text)?;
            let out: Vec<String> = lines
                .iter()
                .map(|l| disambiguate_homophones(l, &sets, &lm, window))
                .collect();
            ctx.emit(&(out.join("\n") + "\n"))
        }
        NormCmd::Mine(args) => {
            let refs = read_lines(&args.refs)?;
            let hyps = read_lines(&args.hyps)?;
            let min_count = ctx.usize_or(args.min_count, "min_count", 2)? as u64;
            let pairs = mine_variants(&refs, &hyps, min_count)?;
            let mut out = String::new();
            for p in pairs {
                out.push_str(&format!("{}\t{}\t{}\n", p.ref_word, p.hyp_word, p.count));
            }
            ctx.emit(&out)
        }
        NormCmd::Dedup(args) => {
            let corpus = read_lines(&args.input)?;
            let heldout = match &args.heldout {
                Some(p) => read_lines(p)?,
                None => Vec::new(),
            };
            let kept = dedup_and_filter(&corpus, &heldout);
            let mut out = kept.join("\n");
            if !out.is_empty() {
                out.push('\n');
            }
            ctx.emit(&out)
        }
        NormCmd::StripDiacritics(args) => {
            let lines = input_lines(&args.input, &args.text)?;
            let out: Vec<String> = lines.iter().map(|l| strip_diacritics(l)).collect();
            ctx.emit(&(out.join("\n") + "\n"))
        }
    }
}
