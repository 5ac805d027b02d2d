//! CTC prefix beam search with shallow LM fusion.
//!
//! Each beam entry is a collapsed label prefix carrying separate blank- and
//! non-blank-ending path masses. LM scores apply once per completed word
//! (separator emission, or the closing of a lexicon word), a final `</s>`
//! term lands at utterance end, and a per-word bonus offsets the LM's
//! deletion bias. Everything derived from the prefix (LM state, pending
//! word, trie node) is a pure function of the label sequence, so merging
//! prefixes never loses bookkeeping.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lm::{ArpaLm, LmState, SENTENCE_END};

use super::{lexicon::Lexicon, DecoderConfig, EmissionMatrix, Hypothesis};

const LN_10: f64 = std::f64::consts::LN_10;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Word/LM bookkeeping attached to a prefix.
#[derive(Debug, Clone)]
struct Book {
    lm_state: Option<LmState>,
    lm_log10: f64,
    word_count: usize,
    /// Tokens of the in-progress word (since the last separator).
    pending: Vec<u32>,
    /// Current trie node in lexicon mode.
    node: usize,
    /// Completed lexicon word ids, in order (lexicon mode only).
    words: Vec<u32>,
}

struct Entry {
    tokens: Vec<u32>,
    p_blank: f64,
    p_nonblank: f64,
    book: Book,
}

impl Entry {
    fn acoustic(&self) -> f64 {
        log_add(self.p_blank, self.p_nonblank)
    }

    fn rank_score(&self, cfg: &DecoderConfig) -> f64 {
        self.acoustic()
            + cfg.lm_weight * LN_10 * self.book.lm_log10
            + cfg.word_bonus * self.book.word_count as f64
    }
}

struct Search<'a> {
    em: &'a EmissionMatrix,
    cfg: DecoderConfig,
    lm: Option<&'a ArpaLm>,
    lexicon: Option<&'a Lexicon>,
    separator: Option<u32>,
}

impl<'a> Search<'a> {
    /// Extends a prefix's bookkeeping by one token. `None` prunes the
    /// extension (lexicon constraint).
    fn extend_book(&self, book: &Book, token: u32) -> Option<Book> {
        let mut next = book.clone();
        if Some(token) == self.separator {
            self.complete_word(&mut next)?;
            return Some(next);
        }
        if let Some(lex) = self.lexicon {
            next.node = lex.child(book.node, token)?;
        }
        next.pending.push(token);
        Some(next)
    }

    /// Closes the pending word if any: scores it with the LM, counts it,
    /// resets the pending state. Prunes in lexicon mode when the pending
    /// tokens spell no word.
    fn complete_word(&self, book: &mut Book) -> Option<()> {
        if book.pending.is_empty() {
            return Some(());
        }
        let word: String = match self.lexicon {
            Some(lex) => {
                let id = lex.word_id_at(book.node)?;
                book.words.push(id);
                book.node = Lexicon::ROOT;
                lex.word_string(id).to_string()
            }
            None => self.em.render_tokens(&book.pending),
        };
        if let Some(lm) = self.lm {
            let state = book.lm_state.as_ref().expect("state present when lm is");
            let (lp, next_state) = lm.score_word(state, &word);
            book.lm_log10 += lp;
            book.lm_state = Some(next_state);
        }
        book.word_count += 1;
        book.pending.clear();
        Some(())
    }

    fn initial_book(&self) -> Book {
        Book {
            lm_state: self.lm.map(ArpaLm::initial_state),
            lm_log10: 0.0,
            word_count: 0,
            pending: Vec::new(),
            node: Lexicon::ROOT,
            words: Vec::new(),
        }
    }

    /// Finalizes one beam entry into a hypothesis; `None` when the pending
    /// tokens are not a lexicon word.
    fn finalize(&self, entry: &Entry) -> Option<Hypothesis> {
        let mut book = entry.book.clone();
        self.complete_word(&mut book)?;
        if let Some(lm) = self.lm {
            let state = book.lm_state.as_ref().unwrap();
            book.lm_log10 += lm.score_word(state, SENTENCE_END).0;
        }
        let text = match self.lexicon {
            Some(lex) => book
                .words
                .iter()
                .map(|&id| lex.word_string(id))
                .collect::<Vec<_>>()
                .join(" "),
            None => self.em.render_tokens(&entry.tokens),
        };
        let acoustic = entry.acoustic();
        let token_count = entry.tokens.len();
        Some(Hypothesis {
            text,
            acoustic_logprob: acoustic,
            lm_log10prob: book.lm_log10,
            combined_score: acoustic
                + self.cfg.lm_weight * LN_10 * book.lm_log10
                + self.cfg.word_bonus * book.word_count as f64,
            token_count,
            word_count: book.word_count,
            confidence: (acoustic / token_count.max(1) as f64).exp(),
        })
    }
}

/// Runs prefix beam search and returns up to `cfg.nbest` hypotheses with
/// distinct texts, sorted by combined score (ties broken by text).
pub fn beam_search(
    em: &EmissionMatrix,
    cfg: &DecoderConfig,
    lm: Option<&ArpaLm>,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<Hypothesis>> {
    cfg.validate()?;
    if cfg.use_lexicon && lexicon.is_none() {
        return Err(Error::invalid("use_lexicon set but no lexicon supplied"));
    }
    if cfg.lm_weight > 0.0 && lm.is_none() {
        return Err(Error::invalid("lm_weight > 0 but no language model supplied"));
    }
    em.check_normalized()?;

    let separator = em
        .vocab()
        .iter()
        .position(|t| EmissionMatrix::is_separator(t))
        .map(|i| i as u32);
    let search = Search {
        em,
        cfg: *cfg,
        lm,
        lexicon: if cfg.use_lexicon { lexicon } else { None },
        separator,
    };

    let mut beam: Vec<Entry> = vec![Entry {
        tokens: Vec::new(),
        p_blank: 0.0,
        p_nonblank: f64::NEG_INFINITY,
        book: search.initial_book(),
    }];

    let blank = em.blank_index() as u32;
    for t in 0..em.frames() {
        let row = em.row(t);
        let mut next: HashMap<Vec<u32>, Entry> = HashMap::with_capacity(beam.len() * 2);

        for entry in &beam {
            let total = entry.acoustic();
            // stay on the same prefix via blank
            upsert(&mut next, &entry.tokens, entry, |e| {
                e.p_blank = log_add(e.p_blank, total + row[blank as usize] as f64);
            });
            for c in 0..em.classes() as u32 {
                if c == blank {
                    continue;
                }
                let emit = row[c as usize] as f64;
                if entry.tokens.last() == Some(&c) {
                    // repeat without blank stays on the same prefix
                    upsert(&mut next, &entry.tokens, entry, |e| {
                        e.p_nonblank = log_add(e.p_nonblank, entry.p_nonblank + emit);
                    });
                    // a blank in between starts a genuinely new token
                    if entry.p_blank != f64::NEG_INFINITY {
                        if let Some(book) = search.extend_book(&entry.book, c) {
                            upsert_extend(&mut next, entry, c, book, |e| {
                                e.p_nonblank = log_add(e.p_nonblank, entry.p_blank + emit);
                            });
                        }
                    }
                } else if let Some(book) = search.extend_book(&entry.book, c) {
                    upsert_extend(&mut next, entry, c, book, |e| {
                        e.p_nonblank = log_add(e.p_nonblank, total + emit);
                    });
                }
            }
        }

        let mut candidates: Vec<Entry> = next.into_values().collect();
        candidates.sort_by(|a, b| {
            b.rank_score(&search.cfg)
                .partial_cmp(&a.rank_score(&search.cfg))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.tokens.cmp(&b.tokens))
        });
        if let Some(best) = candidates.first() {
            let cutoff = best.rank_score(&search.cfg) - cfg.prune_log_threshold;
            candidates.retain(|e| e.rank_score(&search.cfg) >= cutoff);
        }
        candidates.truncate(cfg.beam_size);
        beam = candidates;
    }

    // finalize, then merge entries whose final texts coincide (their word
    // bookkeeping agrees by construction; acoustic masses add)
    let mut merged: HashMap<String, Hypothesis> = HashMap::new();
    for entry in &beam {
        let Some(hyp) = search.finalize(entry) else {
            continue;
        };
        match merged.get_mut(&hyp.text) {
            Some(existing) => {
                debug_assert!((existing.lm_log10prob - hyp.lm_log10prob).abs() < 1e-9);
                let better_tokens = if hyp.acoustic_logprob > existing.acoustic_logprob {
                    hyp.token_count
                } else {
                    existing.token_count
                };
                existing.acoustic_logprob = log_add(existing.acoustic_logprob, hyp.acoustic_logprob);
                existing.token_count = better_tokens;
                existing.combined_score = existing.acoustic_logprob
                    + cfg.lm_weight * LN_10 * existing.lm_log10prob
                    + cfg.word_bonus * existing.word_count as f64;
                existing.confidence =
                    (existing.acoustic_logprob / existing.token_count.max(1) as f64).exp();
            }
            None => {
                merged.insert(hyp.text.clone(), hyp);
            }
        }
    }
    if merged.is_empty() {
        return Err(Error::invalid(
            "no lexicon-valid hypothesis survived the search",
        ));
    }
    let mut hyps: Vec<Hypothesis> = merged.into_values().collect();
    hyps.sort_by(|a, b| {
        b.combined_score
            .partial_cmp(&a.combined_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.text.cmp(&b.text))
    });
    hyps.truncate(cfg.nbest);
    Ok(hyps)
}

fn upsert(map: &mut HashMap<Vec<u32>, Entry>, tokens: &[u32], like: &Entry, update: impl FnOnce(&mut Entry)) {
    let entry = map.entry(tokens.to_vec()).or_insert_with(|| Entry {
        tokens: tokens.to_vec(),
        p_blank: f64::NEG_INFINITY,
        p_nonblank: f64::NEG_INFINITY,
        book: like.book.clone(),
    });
    update(entry);
}

fn upsert_extend(
    map: &mut HashMap<Vec<u32>, Entry>,
    parent: &Entry,
    token: u32,
    book: Book,
    update: impl FnOnce(&mut Entry),
) {
    let mut tokens = Vec::with_capacity(parent.tokens.len() + 1);
    tokens.extend_from_slice(&parent.tokens);
    tokens.push(token);
    let entry = map.entry(tokens).or_insert_with_key(|k| Entry {
        tokens: k.clone(),
        p_blank: f64::NEG_INFINITY,
        p_nonblank: f64::NEG_INFINITY,
        book,
    });
    update(entry);
}
