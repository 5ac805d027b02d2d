//! Backoff N-gram language models with modified Kneser-Ney smoothing.
//!
//! Models are trained from tokenized corpora ([`train_lm`]), serialized in
//! the ARPA text format ([`write_arpa`]/[`read_arpa`]), and queried through
//! immutable [`ArpaLm`] values that are safe to share across threads.
//! Probabilities are base-10 logs throughout, matching ARPA conventions.
//!
//! The estimator is interpolated modified Kneser-Ney with three discount
//! parameters per order computed from count-of-counts (Chen-Goodman closed
//! form), falling back to fixed discounts {0.5, 1.0, 1.5} when an order's
//! count-of-counts are too sparse for the closed form. The unigram
//! distribution interpolates with the uniform distribution over the event
//! set (vocabulary plus `</s>` plus, in open-vocabulary mode, `<unk>`), so
//! every conditional distribution sums to one exactly.

mod arpa;
mod train;

pub use arpa::{read_arpa, write_arpa};
pub use train::{train_lm, train_lm_with, TrainOptions};

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";
pub const UNKNOWN_WORD: &str = "<unk>";

/// Sentinel log10 probability for `<s>`, which is a context but never a
/// predicted event.
pub(crate) const START_LOG10_PROB: f64 = -99.0;

/// A whitespace-tokenized corpus: one word sequence per sentence plus the
/// vocabulary of distinct words. Empty lines are dropped.
#[derive(Debug, Clone, Default)]
pub struct TokenizedCorpus {
    sentences: Vec<Vec<String>>,
    vocabulary: BTreeSet<String>,
}

impl TokenizedCorpus {
    /// Tokenizes lines by splitting on ASCII whitespace. The reserved tokens
    /// `<s>`, `</s>`, and `<unk>` may not appear as corpus words.
    pub fn from_lines<I, S>(lines: I) -> Result<TokenizedCorpus>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut corpus = TokenizedCorpus::default();
        for line in lines {
            let words: Vec<String> = line
                .as_ref()
                .split_ascii_whitespace()
                .map(str::to_owned)
                .collect();
            if words.is_empty() {
                continue;
            }
            for w in &words {
                if w == SENTENCE_START || w == SENTENCE_END || w == UNKNOWN_WORD {
                    return Err(Error::invalid(format!(
                        "reserved token {w} may not appear in a corpus"
                    )));
                }
            }
            corpus.vocabulary.extend(words.iter().cloned());
            corpus.sentences.push(words);
        }
        Ok(corpus)
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gram {
    pub log10_prob: f64,
    /// log10 backoff weight; 0.0 when this gram never serves as a context.
    pub log10_backoff: f64,
}

/// Incremental scoring context: up to `order - 1` most recent words.
///
/// States are only meaningful together with the [`ArpaLm`] that produced
/// them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LmState {
    context: Vec<u32>,
}

impl LmState {
    pub fn context_len(&self) -> usize {
        self.context.len()
    }
}

/// An immutable backoff N-gram model in ARPA form: per-order tables mapping
/// word tuples to (log10 probability, log10 backoff weight).
#[derive(Debug, Clone)]
pub struct ArpaLm {
    order: usize,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    /// tables[k-1] holds the k-gram table.
    tables: Vec<HashMap<Box<[u32]>, Gram>>,
    start: u32,
    unk: Option<u32>,
}

impl ArpaLm {
    pub(crate) fn new(
        order: usize,
        words: Vec<String>,
        tables: Vec<HashMap<Box<[u32]>, Gram>>,
    ) -> ArpaLm {
        debug_assert_eq!(tables.len(), order);
        let ids: HashMap<String, u32> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let start = ids.get(SENTENCE_START).copied().unwrap_or(u32::MAX);
        let unk = ids.get(UNKNOWN_WORD).copied();
        ArpaLm {
            order,
            words,
            ids,
            tables,
            start,
            unk,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// True when the model carries no `<unk>` entry (closed vocabulary).
    pub fn is_closed_vocab(&self) -> bool {
        self.unk.is_none()
    }

    /// log10 probability of `<unk>`; `-inf` for closed-vocabulary models.
    pub fn unk_log10_prob(&self) -> f64 {
        match self.unk {
            Some(id) => self.tables[0]
                .get(&[id][..])
                .map(|g| g.log10_prob)
                .unwrap_or(f64::NEG_INFINITY),
            None => f64::NEG_INFINITY,
        }
    }

    /// The words the model can predict: every unigram except `<s>`.
    pub fn events(&self) -> impl Iterator<Item = &str> {
        self.tables[0]
            .keys()
            .filter(move |g| g[0] != self.start)
            .map(move |g| self.words[g[0] as usize].as_str())
    }

    /// Number of stored n-grams at the given order.
    pub fn table_len(&self, order: usize) -> usize {
        self.tables[order - 1].len()
    }

    /// Scoring state at a sentence start: context `[<s>]`.
    pub fn initial_state(&self) -> LmState {
        let mut context = Vec::new();
        if self.order > 1 {
            context.push(self.start);
        }
        LmState { context }
    }

    /// Scoring state with no context at all.
    pub fn null_state(&self) -> LmState {
        LmState {
            context: Vec::new(),
        }
    }

    fn advance(&self, state: &LmState, word: u32) -> LmState {
        let mut context = state.context.clone();
        context.push(word);
        let keep = self.order.saturating_sub(1);
        if context.len() > keep {
            context.drain(..context.len() - keep);
        }
        LmState { context }
    }

    /// Backoff query: log10 P(word | context).
    fn query(&self, context: &[u32], word: u32) -> f64 {
        let mut buf = Vec::with_capacity(context.len() + 1);
        buf.extend_from_slice(context);
        buf.push(word);
        let n = context.len();
        let mut acc = 0.0;
        for i in 0..=n {
            let gram = &buf[i..];
            if gram.len() <= self.order {
                if let Some(g) = self.tables[gram.len() - 1].get(gram) {
                    return acc + g.log10_prob;
                }
                if i < n {
                    if let Some(ctx) = self.tables[n - i - 1].get(&buf[i..n]) {
                        acc += ctx.log10_backoff;
                    }
                }
            }
        }
        // Not even a unigram entry: only possible for out-of-table ids.
        f64::NEG_INFINITY
    }

    /// log10 conditional probability of `word` given the state, plus the
    /// advanced state. Unseen words are scored as `<unk>`; for closed
    /// vocabularies the score is `-inf` and the context resets.
    pub fn score_word(&self, state: &LmState, word: &str) -> (f64, LmState) {
        match self.ids.get(word).copied().or(self.unk) {
            Some(id) => (self.query(&state.context, id), self.advance(state, id)),
            None => (f64::NEG_INFINITY, self.null_state()),
        }
    }

    /// log10 probability of the full sentence: every word scored in
    /// sequence from `<s>` context, plus the final `</s>` event.
    pub fn sentence_logprob<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let mut state = self.initial_state();
        let mut total = 0.0;
        for w in words {
            let (lp, next) = self.score_word(&state, w.as_ref());
            total += lp;
            state = next;
        }
        total + self.score_word(&state, SENTENCE_END).0
    }

    /// Corpus perplexity: `10^(-total_log10 / N)` where `N` counts every
    /// scored token including each sentence's `</s>`.
    pub fn perplexity(&self, corpus: &TokenizedCorpus) -> Result<f64> {
        if corpus.is_empty() {
            return Err(Error::invalid("cannot compute perplexity of an empty corpus"));
        }
        let mut total = 0.0;
        let mut tokens = 0usize;
        for sentence in corpus.sentences() {
            total += self.sentence_logprob(sentence);
            tokens += sentence.len() + 1;
        }
        Ok(10f64.powf(-total / tokens as f64))
    }
}

/// Renders labeled perplexities as a two-row table:
///
/// ```text
/// Language    yo      ha      pcm     ig
/// Perplexity  775.60  243.24  15.48   472.98
/// ```
pub fn render_perplexity_table(entries: &[(String, f64)]) -> String {
    let mut header = vec!["Language".to_string()];
    let mut values = vec!["Perplexity".to_string()];
    for (label, ppl) in entries {
        header.push(label.clone());
        values.push(format!("{ppl:.2}"));
    }
    let widths: Vec<usize> = header
        .iter()
        .zip(&values)
        .map(|(h, v)| h.len().max(v.len()))
        .collect();
    let render = |cells: &[String]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                line.push_str(cell);
            } else {
                line.push_str(&format!("{:w$}  ", cell, w = widths[i]));
            }
        }
        line.trim_end().to_string()
    };
    format!("{}\n{}\n", render(&header), render(&values))
}
