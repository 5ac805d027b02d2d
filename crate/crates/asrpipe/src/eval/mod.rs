//! Evaluation metrics: word error rate with substitution/insertion/deletion
//! attribution, diacritic-stripped scoring, language-identification F1, and
//! the speaking-rate robustness sweep.

mod sweep;

pub use sweep::{render_sweep_csv, speed_sweep, SweepPoint, DEFAULT_SWEEP_FACTORS};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::LanguageTag;
use crate::textnorm::{preprocess, strip_diacritics};

/// Word-level edit operations from aligning a hypothesis to a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AlignStep {
    /// (ref index, hyp index)
    Match(usize, usize),
    Sub(usize, usize),
    Del(usize),
    Ins(usize),
}

/// Minimal unit-cost alignment with a transpose-consistent backtrace:
/// swapping the inputs mirrors every step, exchanging insertions with
/// deletions, so attributed counts are symmetric.
#[allow(clippy::needless_range_loop)]
pub(crate) fn align_words<T: PartialEq + Ord>(r: &[T], h: &[T]) -> Vec<AlignStep> {
    let (m, n) = (r.len(), h.len());
    let mut d = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=n {
        d[0][j] = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub = d[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]);
            let del = d[i - 1][j] + 1;
            let ins = d[i][j - 1] + 1;
            d[i][j] = sub.min(del).min(ins);
        }
    }

    let mut steps = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
            steps.push(AlignStep::Ins(j));
            continue;
        }
        if j == 0 {
            i -= 1;
            steps.push(AlignStep::Del(i));
            continue;
        }
        let cost = d[i][j];
        let diag_ok = d[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]) == cost;
        if diag_ok {
            i -= 1;
            j -= 1;
            steps.push(if r[i] == h[j] {
                AlignStep::Match(i, j)
            } else {
                AlignStep::Sub(i, j)
            });
            continue;
        }
        let del_ok = d[i - 1][j] + 1 == cost;
        let ins_ok = d[i][j - 1] + 1 == cost;
        let take_del = match (del_ok, ins_ok) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                // Both optimal: move toward the diagonal; on the diagonal,
                // order the words so the choice mirrors under transposition.
                match i.cmp(&j) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => r[i - 1] > h[j - 1],
                }
            }
            (false, false) => unreachable!("DP invariant"),
        };
        if take_del {
            i -= 1;
            steps.push(AlignStep::Del(i));
        } else {
            j -= 1;
            steps.push(AlignStep::Ins(j));
        }
    }
    steps.reverse();
    steps
}

/// Edit counts against a reference. The rate can exceed 1 when the
/// hypothesis inserts more words than the reference holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WerBreakdown {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub ref_words: u64,
}

impl WerBreakdown {
    pub fn rate(&self) -> f64 {
        (self.substitutions + self.insertions + self.deletions) as f64 / self.ref_words as f64
    }

    pub fn edits(&self) -> u64 {
        self.substitutions + self.insertions + self.deletions
    }

    fn add(&mut self, other: &WerBreakdown) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
        self.ref_words += other.ref_words;
    }
}

fn wer_over_tokens(r: &[&str], h: &[&str]) -> Result<WerBreakdown> {
    if r.is_empty() {
        return Err(Error::invalid("empty reference after tokenization"));
    }
    let mut out = WerBreakdown {
        substitutions: 0,
        insertions: 0,
        deletions: 0,
        ref_words: r.len() as u64,
    };
    for step in align_words(r, h) {
        match step {
            AlignStep::Match(..) => {}
            AlignStep::Sub(..) => out.substitutions += 1,
            AlignStep::Del(_) => out.deletions += 1,
            AlignStep::Ins(_) => out.insertions += 1,
        }
    }
    Ok(out)
}

/// WER with the default transcript preprocessing applied to both sides
/// (lowercasing, punctuation stripped except apostrophes/dashes, digits
/// spelled out).
pub fn wer(reference: &str, hypothesis: &str) -> Result<WerBreakdown> {
    let r = preprocess(reference, true);
    let h = preprocess(hypothesis, true);
    wer_raw(&r, &h)
}

/// WER over whitespace tokens exactly as given.
pub fn wer_raw(reference: &str, hypothesis: &str) -> Result<WerBreakdown> {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    wer_over_tokens(&r, &h)
}

/// Pooled WER: edit and reference counts are summed over all pairs before
/// dividing.
pub fn corpus_wer<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<WerBreakdown> {
    corpus_wer_with(pairs, wer)
}

/// Pooled WER without preprocessing.
pub fn corpus_wer_raw<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<WerBreakdown> {
    corpus_wer_with(pairs, wer_raw)
}

fn corpus_wer_with<S: AsRef<str>>(
    pairs: &[(S, S)],
    scorer: impl Fn(&str, &str) -> Result<WerBreakdown>,
) -> Result<WerBreakdown> {
    if pairs.is_empty() {
        return Err(Error::invalid("no reference/hypothesis pairs"));
    }
    let mut total = WerBreakdown {
        substitutions: 0,
        insertions: 0,
        deletions: 0,
        ref_words: 0,
    };
    for (r, h) in pairs {
        total.add(&scorer(r.as_ref(), h.as_ref())?);
    }
    Ok(total)
}

/// Mean of per-utterance WER rates (unweighted), emitted alongside the
/// pooled rate since reporting conventions differ.
pub fn utterance_mean_wer<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("no reference/hypothesis pairs"));
    }
    let mut sum = 0.0;
    for (r, h) in pairs {
        sum += wer(r.as_ref(), h.as_ref())?.rate();
    }
    Ok(sum / pairs.len() as f64)
}

/// Arithmetic mean; render with two decimals for summary rows.
pub fn macro_average(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("cannot average an empty sequence"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// WER with diacritics retained vs stripped from both sides.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiacriticModes {
    pub retained: WerBreakdown,
    pub stripped: WerBreakdown,
}

pub fn wer_diacritic_modes<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<DiacriticModes> {
    let retained = corpus_wer(pairs)?;
    let stripped_pairs: Vec<(String, String)> = pairs
        .iter()
        .map(|(r, h)| (strip_diacritics(r.as_ref()), strip_diacritics(h.as_ref())))
        .collect();
    let stripped = corpus_wer(&stripped_pairs)?;
    Ok(DiacriticModes { retained, stripped })
}

/// Pooled per-language counts for language identification.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct LidScore {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl LidScore {
    /// F1 in [0, 100]; `None` when the language never occurs.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            None
        } else {
            Some(100.0 * 2.0 * self.tp as f64 / denom as f64)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LidReport {
    pub per_language: BTreeMap<LanguageTag, LidScore>,
}

impl LidReport {
    pub fn f1(&self, lang: LanguageTag) -> Option<f64> {
        self.per_language.get(&lang).and_then(LidScore::f1)
    }

    /// CSV rows `lang,f1` with two decimals.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("lang,f1\n");
        for (lang, score) in &self.per_language {
            match score.f1() {
                Some(f1) => out.push_str(&format!("{lang},{f1:.2}\n")),
                None => out.push_str(&format!("{lang},NA\n")),
            }
        }
        out
    }
}

/// Micro-averaged per-language F1 from pooled (prediction, truth) pairs. A
/// missing prediction counts as a false negative for the true language and
/// no false positive anywhere.
pub fn lid_f1(items: &[(Option<LanguageTag>, LanguageTag)]) -> Result<LidReport> {
    if items.is_empty() {
        return Err(Error::invalid("no language-identification items"));
    }
    let mut report = LidReport::default();
    for &(predicted, truth) in items {
        match predicted {
            Some(p) if p == truth => report.per_language.entry(truth).or_default().tp += 1,
            Some(p) => {
                report.per_language.entry(p).or_default().fp += 1;
                report.per_language.entry(truth).or_default().fn_ += 1;
            }
            None => report.per_language.entry(truth).or_default().fn_ += 1,
        }
    }
    Ok(report)
}
