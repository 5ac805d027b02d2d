//! Lexicon-constrained CTC prefix beam search over precomputed emission
//! matrices, with optional N-gram shallow fusion, N-best output, confidence
//! scoring, and language-aware hypothesis selection.

mod beam;
mod emissions;
mod lexicon;

pub use beam::beam_search;
pub use emissions::{read_emissions, write_emissions};
pub use lexicon::Lexicon;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::{strip_language_tag, LanguageTag};

/// Per-frame natural-log posteriors from an external acoustic model.
#[derive(Debug, Clone)]
pub struct EmissionMatrix {
    frames: usize,
    classes: usize,
    log_probs: Vec<f32>,
    blank_index: usize,
    vocab: Vec<String>,
}

impl EmissionMatrix {
    pub fn new(
        log_probs: Vec<f32>,
        frames: usize,
        classes: usize,
        blank_index: usize,
        vocab: Vec<String>,
    ) -> Result<EmissionMatrix> {
        if frames == 0 {
            return Err(Error::invalid("T >= 1 required"));
        }
        if classes == 0 {
            return Err(Error::invalid("vocabulary must be non-empty"));
        }
        if log_probs.len() != frames * classes {
            return Err(Error::invalid(format!(
                "expected {} log-probabilities for {frames}x{classes}, got {}",
                frames * classes,
                log_probs.len()
            )));
        }
        if blank_index >= classes {
            return Err(Error::invalid(format!(
                "blank index {blank_index} out of range for {classes} classes"
            )));
        }
        if vocab.len() != classes {
            return Err(Error::invalid(format!(
                "vocabulary has {} entries for {classes} classes",
                vocab.len()
            )));
        }
        Ok(EmissionMatrix {
            frames,
            classes,
            log_probs,
            blank_index,
            vocab,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn blank_index(&self) -> usize {
        self.blank_index
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn log_probs(&self) -> &[f32] {
        &self.log_probs
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.log_probs[t * self.classes..(t + 1) * self.classes]
    }

    /// Each row must log-sum-exp to zero within 1e-3.
    pub fn check_normalized(&self) -> Result<()> {
        for t in 0..self.frames {
            let row = self.row(t);
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
            let lse = max + row.iter().map(|&v| (v as f64 - max).exp()).sum::<f64>().ln();
            if lse.abs() > 1e-3 {
                return Err(Error::invalid(format!(
                    "unnormalized emissions: row {t} sums to exp({lse:.6})"
                )));
            }
        }
        Ok(())
    }

    /// True for the word-delimiter tokens understood by the decoder.
    pub(crate) fn is_separator(token: &str) -> bool {
        matches!(token, "|" | " " | "\u{2581}")
    }

    /// Joins a collapsed token sequence into text: separators become spaces,
    /// `▁`-prefixed subwords start a new word, everything else concatenates.
    pub(crate) fn render_tokens(&self, tokens: &[u32]) -> String {
        let mut out = String::new();
        for &t in tokens {
            let tok = &self.vocab[t as usize];
            if Self::is_separator(tok) {
                out.push(' ');
            } else if let Some(rest) = tok.strip_prefix('\u{2581}') {
                out.push(' ');
                out.push_str(rest);
            } else {
                out.push_str(tok);
            }
        }
        out.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecoderConfig {
    pub beam_size: usize,
    /// LM weight (alpha) applied to log10 LM scores at word completions.
    pub lm_weight: f64,
    /// Per-word bonus (beta) offsetting the LM's deletion bias.
    pub word_bonus: f64,
    pub use_lexicon: bool,
    /// Hypotheses scoring below best-minus-threshold are pruned each frame.
    pub prune_log_threshold: f64,
    pub nbest: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_size: 100,
            lm_weight: 0.5,
            word_bonus: 1.0,
            use_lexicon: false,
            prune_log_threshold: f64::INFINITY,
            nbest: 1,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::invalid("beam size must be at least 1"));
        }
        if self.nbest == 0 || self.nbest > self.beam_size {
            return Err(Error::invalid(format!(
                "nbest must lie in 1..=beam_size, got {} with beam {}",
                self.nbest, self.beam_size
            )));
        }
        if self.lm_weight < 0.0 {
            return Err(Error::invalid("lm_weight must be nonnegative"));
        }
        Ok(())
    }
}

/// One decoded candidate.
#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub text: String,
    /// Natural-log CTC probability marginalized over alignments.
    pub acoustic_logprob: f64,
    /// Accumulated log10 LM score over completed words plus `</s>`.
    pub lm_log10prob: f64,
    /// acoustic + alpha*ln(10)*lm + beta*words.
    pub combined_score: f64,
    pub token_count: usize,
    pub word_count: usize,
    /// exp(acoustic / max(1, token_count)), in (0, 1].
    pub confidence: f64,
}

/// Per-frame argmax, collapse repeats, drop blanks.
pub fn greedy_decode(em: &EmissionMatrix) -> String {
    let mut tokens: Vec<u32> = Vec::new();
    let mut prev: Option<usize> = None;
    for t in 0..em.frames() {
        let row = em.row(t);
        let mut best = 0usize;
        for (idx, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = idx;
            }
        }
        if best != em.blank_index() && prev != Some(best) {
            tokens.push(best as u32);
        }
        prev = Some(best);
    }
    em.render_tokens(&tokens)
}

/// A language-aware selection from an N-best list.
#[derive(Debug, Clone, Serialize)]
pub struct SelectedHypothesis {
    pub hypothesis: Hypothesis,
    /// True when no hypothesis carried the wanted tag and the overall top-1
    /// was returned instead.
    pub fallback: bool,
}

/// Picks the highest-scored hypothesis whose leading language tag matches
/// `want`; falls back to the overall top-1 when none does.
pub fn select_language_hypothesis(
    nbest: &[Hypothesis],
    want: LanguageTag,
) -> Result<SelectedHypothesis> {
    if nbest.is_empty() {
        return Err(Error::invalid("empty N-best list"));
    }
    for hyp in nbest {
        if strip_language_tag(&hyp.text).0 == Some(want) {
            return Ok(SelectedHypothesis {
                hypothesis: hyp.clone(),
                fallback: false,
            });
        }
    }
    Ok(SelectedHypothesis {
        hypothesis: nbest[0].clone(),
        fallback: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Emissions built from linear probabilities, one row per frame.
    pub(crate) fn em_from_probs(
        rows: &[Vec<f64>],
        blank: usize,
        vocab: &[&str],
    ) -> EmissionMatrix {
        let classes = vocab.len();
        let mut log_probs = Vec::with_capacity(rows.len() * classes);
        for row in rows {
            assert_eq!(row.len(), classes);
            let sum: f64 = row.iter().sum();
            log_probs.extend(row.iter().map(|p| ((p / sum).ln()) as f32));
        }
        EmissionMatrix::new(
            log_probs,
            rows.len(),
            classes,
            blank,
            vocab.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn one_hot(path: &[usize], classes: usize) -> Vec<Vec<f64>> {
        path.iter()
            .map(|&i| {
                let mut row = vec![0.001; classes];
                row[i] = 1.0;
                row
            })
            .collect()
    }

    #[test]
    fn greedy_collapses_repeats_and_blanks() {
        let vocab = ["<b>", "a", "b"];
        // blank, a, a, blank, b -> "ab"
        let em = em_from_probs(&one_hot(&[0, 1, 1, 0, 2], 3), 0, &vocab);
        assert_eq!(greedy_decode(&em), "ab");
    }

    #[test]
    fn greedy_all_blank_is_empty() {
        let em = em_from_probs(&one_hot(&[0, 0, 0], 3), 0, &["<b>", "a", "b"]);
        assert_eq!(greedy_decode(&em), "");
    }

    #[test]
    fn greedy_blank_separates_repeats() {
        let em = em_from_probs(&one_hot(&[1, 0, 1], 3), 0, &["<b>", "a", "b"]);
        assert_eq!(greedy_decode(&em), "aa");
    }

    #[test]
    fn separator_renders_as_space() {
        let em = em_from_probs(&one_hot(&[1, 3, 2], 4), 0, &["<b>", "a", "b", "|"]);
        assert_eq!(greedy_decode(&em), "a b");
    }

    #[test]
    fn normalization_check_catches_bad_rows() {
        let em = EmissionMatrix::new(
            vec![-0.1, -0.1],
            1,
            2,
            0,
            vec!["<b>".into(), "a".into()],
        )
        .unwrap();
        assert!(em.check_normalized().is_err());
    }

    #[test]
    fn zero_frames_rejected() {
        assert!(EmissionMatrix::new(vec![], 0, 2, 0, vec!["<b>".into(), "a".into()]).is_err());
    }

    fn hyp(text: &str, score: f64) -> Hypothesis {
        Hypothesis {
            text: text.to_string(),
            acoustic_logprob: score,
            lm_log10prob: 0.0,
            combined_score: score,
            token_count: text.chars().count().max(1),
            word_count: 1,
            confidence: (score / text.chars().count().max(1) as f64).exp(),
        }
    }

    #[test]
    fn language_selection_prefers_matching_tag() {
        let nbest = [hyp("<|en|> the thing", -1.0), hyp("<|pd|> wetin", -1.2)];
        let sel = select_language_hypothesis(&nbest, LanguageTag::Pd).unwrap();
        assert_eq!(sel.hypothesis.text, "<|pd|> wetin");
        assert!(!sel.fallback);
    }

    #[test]
    fn language_selection_falls_back_to_top1() {
        let nbest = [hyp("<|en|> the thing", -1.0), hyp("<|yo|> bawo", -1.2)];
        let sel = select_language_hypothesis(&nbest, LanguageTag::Pd).unwrap();
        assert_eq!(sel.hypothesis.text, "<|en|> the thing");
        assert!(sel.fallback);
    }

    #[test]
    fn language_selection_single_match() {
        let nbest = [hyp("<|pd|> wetin", -1.0)];
        let sel = select_language_hypothesis(&nbest, LanguageTag::Pd).unwrap();
        assert!(!sel.fallback);
        assert!(select_language_hypothesis(&[], LanguageTag::Pd).is_err());
    }
}
