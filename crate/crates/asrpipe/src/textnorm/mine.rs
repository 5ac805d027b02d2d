//! Variant-candidate mining from reference/hypothesis transcript pairs:
//! word-level edit alignment, substitution pairs aggregated by count.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::eval::{align_words, AlignStep};

/// A mined substitution candidate: `ref_word` was transcribed as `hyp_word`
/// in `count` aligned positions. Candidates feed manual filtering into a
/// variant table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPair {
    pub ref_word: String,
    pub hyp_word: String,
    pub count: u64,
}

/// Aligns each reference/hypothesis pair at the word level and aggregates
/// substitution pairs, keeping those seen at least `min_count` times,
/// sorted by count descending (ties alphabetical).
pub fn mine_variants<S: AsRef<str>>(
    refs: &[S],
    hyps: &[S],
    min_count: u64,
) -> Result<Vec<AlignmentPair>> {
    if refs.len() != hyps.len() {
        return Err(Error::invalid(format!(
            "refs and hyps must align one-to-one: {} vs {}",
            refs.len(),
            hyps.len()
        )));
    }
    let mut counts: HashMap<(String, String), u64> = HashMap::new();
    for (r, h) in refs.iter().zip(hyps) {
        let r_tok: Vec<&str> = r.as_ref().split_whitespace().collect();
        let h_tok: Vec<&str> = h.as_ref().split_whitespace().collect();
        for step in align_words(&r_tok, &h_tok) {
            if let AlignStep::Sub(i, j) = step {
                *counts
                    .entry((r_tok[i].to_string(), h_tok[j].to_string()))
                    .or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<AlignmentPair> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|((ref_word, hyp_word), count)| AlignmentPair {
            ref_word,
            hyp_word,
            count,
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.ref_word.cmp(&b.ref_word))
            .then_with(|| a.hyp_word.cmp(&b.hyp_word))
    });
    Ok(pairs)
}
