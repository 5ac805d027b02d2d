//! Transcript text preprocessing, Pidgin variant replacement and homophone
//! disambiguation, diacritic stripping, and LM-corpus dedup/heldout
//! filtering.

mod homophones;
mod mine;
mod numbers;
mod variants;

pub use homophones::{disambiguate_homophones, HomophoneSets};
pub use mine::{mine_variants, AlignmentPair};
pub use numbers::spell_cardinal;
pub use variants::{apply_variants, VariantTable};

use std::collections::HashSet;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// General ASR text preprocessing: Unicode-aware lowercasing with diacritics
/// preserved, punctuation removed except apostrophes and dashes, optional
/// digit-to-cardinal spelling, whitespace collapsed and trimmed.
///
/// Idempotent: preprocessing its own output changes nothing.
pub fn preprocess(text: &str, spell_digits: bool) -> String {
    let mut mapped = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() || c == '\'' || c == '-' || is_combining_mark(c) {
            mapped.push(c);
        } else {
            mapped.push(' ');
        }
    }

    let mut out = String::with_capacity(mapped.len());
    let mut run = String::new();
    let flush_run = |out: &mut String, run: &mut String| {
        if !run.is_empty() {
            if spell_digits {
                out.push(' ');
                out.push_str(&numbers::spell_digit_run(run));
                out.push(' ');
            } else {
                out.push_str(run);
            }
            run.clear();
        }
    };
    for c in mapped.chars() {
        if c.is_ascii_digit() {
            run.push(c);
        } else {
            flush_run(&mut out, &mut run);
            out.push(c);
        }
    }
    flush_run(&mut out, &mut run);

    let mut collapsed = String::with_capacity(out.len());
    for word in out.split_whitespace() {
        if !collapsed.is_empty() {
            collapsed.push(' ');
        }
        collapsed.push_str(word);
    }
    collapsed
}

/// Removes diacritical marks by canonical decomposition, dropping combining
/// marks, and recomposing. Dotted Yorùbá/Igbo letters reduce to their base
/// ASCII letters.
pub fn strip_diacritics(text: &str) -> String {
    text.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}

/// Deduplicates a corpus and removes lines colliding with a heldout set,
/// comparing preprocessed forms (digits left as-is) while emitting the
/// original surviving lines in order.
pub fn dedup_and_filter<S: AsRef<str>>(corpus: &[S], heldout: &[S]) -> Vec<String> {
    let held: HashSet<String> = heldout
        .iter()
        .map(|l| preprocess(l.as_ref(), false))
        .collect();
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    for line in corpus {
        let key = preprocess(line.as_ref(), false);
        if held.contains(&key) || !seen.insert(key) {
            continue;
        }
        out.push(line.as_ref().to_string());
    }
    out
}
