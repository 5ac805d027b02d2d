use std::path::PathBuf;

use clap::{Args, Subcommand};

use asrpipe::error::{Error, Result};
use asrpipe::lm::{
    read_arpa, render_perplexity_table, train_lm_with, TokenizedCorpus, TrainOptions,
};

use super::read_lines;
use crate::Ctx;

#[derive(Subcommand)]
pub enum LmCmd {
    /// Train a modified Kneser-Ney model and write it as ARPA text.
    Train(TrainArgs),
    /// Corpus perplexity of a model (or a labeled table of several).
    Perplexity(PerplexityArgs),
    /// Sentence log10 probabilities under a model.
    Score(ScoreArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training corpus, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Model order. [default: 5]
    #[arg(long)]
    order: Option<usize>,
    /// Per-order pruning thresholds, e.g. 1,1,2. [default: no pruning]
    #[arg(long)]
    min_count: Option<String>,
    /// Omit <unk>: out-of-vocabulary words get zero probability.
    #[arg(long)]
    closed_vocab: bool,
    /// Output ARPA path.
    #[arg(long)]
    out_model: PathBuf,
}

#[derive(Args)]
pub struct PerplexityArgs {
    /// ARPA model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Evaluation corpus, one sentence per line.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Repeated label=model:corpus triples rendered as a table.
    #[arg(long = "pair")]
    pairs: Vec<String>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// ARPA model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Single sentence to score.
    #[arg(long)]
    text: Option<String>,
    /// File of sentences to score, one per line.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, cmd: LmCmd) -> Result<()> {
    match cmd {
        LmCmd::Train(args) => train(ctx, args),
        LmCmd::Perplexity(args) => perplexity(ctx, args),
        LmCmd::Score(args) => score(ctx, args),
    }
}

fn train(ctx: &Ctx, args: TrainArgs) -> Result<()> {
    let order = ctx.usize_or(args.order, "order", 5)?;
    let corpus = TokenizedCorpus::from_lines(read_lines(&args.corpus)?)?;
    let mut opts = TrainOptions::new(order);
    opts.closed_vocab = args.closed_vocab;
    if let Some(spec) = &args.min_count {
        opts.min_count = spec
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::invalid(format!("bad min-count value \"{v}\"")))
            })
            .collect::<Result<Vec<u64>>>()?;
    }
    let lm = train_lm_with(&corpus, &opts)?;
    asrpipe::lm::write_arpa(&lm, &args.out_model)?;
    ctx.emit(&format!(
        "trained order={order} sentences={} vocabulary={}\n",
        corpus.len(),
        corpus.vocabulary().len()
    ))
}

fn perplexity(ctx: &Ctx, args: PerplexityArgs) -> Result<()> {
    if !args.pairs.is_empty() {
        let mut entries = Vec::new();
        for pair in &args.pairs {
            let (label, rest) = pair
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected label=model:corpus, got \"{pair}\"")))?;
            let (model, corpus) = rest
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected label=model:corpus, got \"{pair}\"")))?;
            let lm = read_arpa(model)?;
            let corpus = TokenizedCorpus::from_lines(read_lines(corpus.as_ref())?)?;
            entries.push((label.to_string(), lm.perplexity(&corpus)?));
        }
        return ctx.emit(&render_perplexity_table(&entries));
    }
    let model = ctx.require_path(&args.model, "model", "an ARPA model")?;
    let corpus_path = ctx.require_path(&args.corpus, "corpus", "an evaluation corpus")?;
    let lm = read_arpa(model)?;
    let corpus = TokenizedCorpus::from_lines(read_lines(&corpus_path)?)?;
    ctx.emit(&format!("perplexity={:.2}\n", lm.perplexity(&corpus)?))
}

fn score(ctx: &Ctx, args: ScoreArgs) -> Result<()> {
    let model = ctx.require_path(&args.model, "model", "an ARPA model")?;
    let lm = read_arpa(model)?;
    let sentences: Vec<String> = match (&args.text, &args.input) {
        (Some(t), None) => vec![t.clone()],
        (None, Some(path)) => read_lines(path)?,
        _ => return Err(Error::invalid("pass exactly one of --text or --in")),
    };
    let mut out = String::new();
    for sentence in &sentences {
        let words: Vec<&str> = sentence.split_whitespace().collect();
        out.push_str(&format!("log10={:.6}\n", lm.sentence_logprob(&words)));
    }
    ctx.emit(&out)
}
