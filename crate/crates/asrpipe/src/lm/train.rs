//! Modified Kneser-Ney estimation.
//!
//! Counting follows the adjusted-count scheme: raw counts at the highest
//! order, continuation counts (distinct left extensions) below it, except
//! that grams beginning with `<s>` keep raw counts since nothing can extend
//! them to the left. Discounts come from the Chen-Goodman closed form per
//! order, with a fixed fallback when count-of-counts are degenerate, and
//! lower-order mass is interpolated in rather than reached only by backoff.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{
    ArpaLm, Gram, TokenizedCorpus, SENTENCE_END, SENTENCE_START, START_LOG10_PROB, UNKNOWN_WORD,
};

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub order: usize,
    /// Per-order pruning thresholds (adjusted count must be >= threshold).
    /// Empty means no pruning. Threshold 1 at the unigram position is
    /// required: unigram pruning is not supported.
    pub min_count: Vec<u64>,
    /// Omit `<unk>`: out-of-vocabulary words get zero probability.
    pub closed_vocab: bool,
    /// Discounts used when an order's count-of-counts defeat the closed form.
    pub fallback_discounts: (f64, f64, f64),
    /// Skip count-of-counts estimation entirely and use these discounts at
    /// every order. Re-estimated discounts shift as the corpus grows, which
    /// makes probabilities non-monotone in added evidence; fixing them
    /// restores monotonicity.
    pub forced_discounts: Option<(f64, f64, f64)>,
}

impl TrainOptions {
    pub fn new(order: usize) -> TrainOptions {
        TrainOptions {
            order,
            min_count: Vec::new(),
            closed_vocab: false,
            fallback_discounts: (0.5, 1.0, 1.5),
            forced_discounts: None,
        }
    }
}

/// Trains an interpolated modified Kneser-Ney model of the given order.
/// `min_count` prunes n-grams with adjusted counts below the per-order
/// threshold before estimation; empty means no pruning.
pub fn train_lm(corpus: &TokenizedCorpus, order: usize, min_count: &[u64]) -> Result<ArpaLm> {
    let mut opts = TrainOptions::new(order);
    opts.min_count = min_count.to_vec();
    train_lm_with(corpus, &opts)
}

pub fn train_lm_with(corpus: &TokenizedCorpus, opts: &TrainOptions) -> Result<ArpaLm> {
    let order = opts.order;
    if order == 0 {
        return Err(Error::invalid("model order must be at least 1"));
    }
    if corpus.is_empty() {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }
    let min_count: Vec<u64> = if opts.min_count.is_empty() {
        vec![1; order]
    } else if opts.min_count.len() == order {
        opts.min_count.to_vec()
    } else {
        return Err(Error::invalid(format!(
            "min_count must have one threshold per order ({} expected, {} given)",
            order,
            opts.min_count.len()
        )));
    };
    if min_count[0] > 1 {
        return Err(Error::invalid("unigram pruning is not supported"));
    }
    if min_count.contains(&0) {
        return Err(Error::invalid("min_count thresholds must be at least 1"));
    }

    // Intern words. 0 = <s>, 1 = </s>, 2 = <unk>.
    let mut words: Vec<String> = vec![
        SENTENCE_START.to_string(),
        SENTENCE_END.to_string(),
        UNKNOWN_WORD.to_string(),
    ];
    let mut ids: HashMap<&str, u32> = HashMap::new();
    ids.insert(SENTENCE_START, 0);
    ids.insert(SENTENCE_END, 1);
    ids.insert(UNKNOWN_WORD, 2);
    for w in corpus.vocabulary() {
        if !ids.contains_key(w.as_str()) {
            ids.insert(w, words.len() as u32);
            words.push(w.clone());
        }
    }
    let start = 0u32;
    let end = 1u32;
    let unk = 2u32;

    // Raw counts per order over <s> w1 .. wm </s>.
    let mut raw: Vec<HashMap<Box<[u32]>, u64>> = vec![HashMap::new(); order];
    for sentence in corpus.sentences() {
        let mut padded = Vec::with_capacity(sentence.len() + 2);
        padded.push(start);
        padded.extend(sentence.iter().map(|w| ids[w.as_str()]));
        padded.push(end);
        for k in 1..=order {
            for window in padded.windows(k) {
                *raw[k - 1].entry(window.into()).or_insert(0) += 1;
            }
        }
    }

    // Adjusted counts: raw at the highest order; continuation counts below,
    // with raw counts kept for <s>-initial grams.
    let mut adj: Vec<HashMap<Box<[u32]>, u64>> = vec![HashMap::new(); order];
    adj[order - 1] = raw[order - 1].clone();
    for k in (1..order).rev() {
        let mut table: HashMap<Box<[u32]>, u64> = HashMap::new();
        for gram in raw[k].keys() {
            *table.entry(gram[1..].into()).or_insert(0) += 1;
        }
        for (gram, &count) in &raw[k - 1] {
            if gram[0] == start {
                table.insert(gram.clone(), count);
            }
        }
        adj[k - 1] = table;
    }

    // Discounts per order from count-of-counts of adjusted counts. The <s>
    // unigram is a context, not an event, and is excluded at order 1.
    let discounts: Vec<(f64, f64, f64)> = (1..=order)
        .map(|k| match opts.forced_discounts {
            Some(d) => d,
            None => {
                let counts = adj[k - 1]
                    .iter()
                    .filter(|(g, _)| !(k == 1 && g[0] == start))
                    .map(|(_, &c)| c);
                estimate_discounts(counts, opts.fallback_discounts)
            }
        })
        .collect();

    // Survivor sets under pruning with prefix and suffix closure.
    let mut survives: Vec<HashMap<Box<[u32]>, u64>> = Vec::with_capacity(order);
    for k in 1..=order {
        let mut surv: HashMap<Box<[u32]>, u64> = HashMap::new();
        for (gram, &count) in &adj[k - 1] {
            if count < min_count[k - 1] {
                continue;
            }
            if k > 1
                && (!survives[k - 2].contains_key(&gram[..k - 1])
                    || !survives[k - 2].contains_key(&gram[1..]))
            {
                continue;
            }
            surv.insert(gram.clone(), count);
        }
        survives.push(surv);
    }

    // Unigram distribution over events (everything but <s>, plus <unk> in
    // open-vocabulary mode), interpolated with the uniform distribution.
    let mut probs: Vec<HashMap<Box<[u32]>, f64>> = vec![HashMap::new(); order];
    let mut backoffs: Vec<HashMap<Box<[u32]>, f64>> = vec![HashMap::new(); order];
    {
        let (d1, d2, d3) = discounts[0];
        let events: Vec<(Box<[u32]>, u64)> = survives[0]
            .iter()
            .filter(|(g, _)| g[0] != start)
            .map(|(g, &c)| (g.clone(), c))
            .collect();
        let total: u64 = events.iter().map(|(_, c)| c).sum();
        if total == 0 {
            return Err(Error::invalid("corpus has no countable events"));
        }
        let event_count = events.len() + usize::from(!opts.closed_vocab);
        let mut discounted = 0.0;
        for (_, c) in &events {
            discounted += discount_for(*c, d1, d2, d3);
        }
        let gamma = discounted / total as f64;
        let uniform = gamma / event_count as f64;
        for (gram, c) in &events {
            let u = (*c as f64 - discount_for(*c, d1, d2, d3)) / total as f64;
            probs[0].insert(gram.clone(), u + uniform);
        }
        if !opts.closed_vocab {
            probs[0].insert(Box::from(&[unk][..]), uniform);
        }
    }

    // Higher orders, bottom-up: group by context, discount surviving mass,
    // route discounted plus pruned mass to the backoff weight, interpolate
    // with the already-final lower order.
    for k in 2..=order {
        let (d1, d2, d3) = discounts[k - 1];
        struct Bucket {
            total: u64,
            surviving: Vec<(Box<[u32]>, u64)>,
            pruned_mass: u64,
        }
        let mut contexts: HashMap<Box<[u32]>, Bucket> = HashMap::new();
        for (gram, &count) in &adj[k - 1] {
            let bucket = contexts
                .entry(gram[..k - 1].into())
                .or_insert_with(|| Bucket {
                    total: 0,
                    surviving: Vec::new(),
                    pruned_mass: 0,
                });
            bucket.total += count;
            if survives[k - 1].contains_key(gram) {
                bucket.surviving.push((gram.clone(), count));
            } else {
                bucket.pruned_mass += count;
            }
        }
        for (context, bucket) in contexts {
            if !survives[k - 2].contains_key(&context) {
                // Context itself was pruned; its extensions were dropped by
                // prefix closure and their mass is unreachable anyway.
                continue;
            }
            let total = bucket.total as f64;
            let mut discounted = bucket.pruned_mass as f64;
            for (_, c) in &bucket.surviving {
                discounted += discount_for(*c, d1, d2, d3);
            }
            let gamma = discounted / total;
            for (gram, c) in &bucket.surviving {
                let u = (*c as f64 - discount_for(*c, d1, d2, d3)) / total;
                let lower = probs[k - 2]
                    .get(&gram[1..])
                    .copied()
                    .expect("suffix closure guarantees a lower-order entry");
                probs[k - 1].insert(gram.clone(), u + gamma * lower);
            }
            backoffs[k - 2].insert(context, gamma);
        }
    }

    // Assemble ARPA tables in log10.
    let mut tables: Vec<HashMap<Box<[u32]>, Gram>> = vec![HashMap::new(); order];
    for k in 1..=order {
        for (gram, &p) in &probs[k - 1] {
            let log10_backoff = backoffs[k - 1].get(gram).map(|g| g.log10()).unwrap_or(0.0);
            tables[k - 1].insert(
                gram.clone(),
                Gram {
                    log10_prob: p.log10(),
                    log10_backoff,
                },
            );
        }
    }
    // <s> is a context with a backoff weight but is never predicted.
    let start_backoff = backoffs[0]
        .get(&[start][..])
        .map(|g| g.log10())
        .unwrap_or(0.0);
    tables[0].insert(
        Box::from(&[start][..]),
        Gram {
            log10_prob: START_LOG10_PROB,
            log10_backoff: start_backoff,
        },
    );

    Ok(ArpaLm::new(order, words, tables))
}

fn discount_for(count: u64, d1: f64, d2: f64, d3plus: f64) -> f64 {
    match count {
        0 => 0.0,
        1 => d1,
        2 => d2,
        _ => d3plus,
    }
}

/// Chen-Goodman closed-form discounts from count-of-counts, or the fallback
/// when the statistics are degenerate.
fn estimate_discounts(counts: impl Iterator<Item = u64>, fallback: (f64, f64, f64)) -> (f64, f64, f64) {
    let mut n = [0u64; 4];
    for c in counts {
        if (1..=4).contains(&c) {
            n[(c - 1) as usize] += 1;
        }
    }
    let (n1, n2, n3, n4) = (n[0], n[1], n[2], n[3]);
    if n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0 {
        return fallback;
    }
    let y = n1 as f64 / (n1 + 2 * n2) as f64;
    let d1 = 1.0 - 2.0 * y * n2 as f64 / n1 as f64;
    let d2 = 2.0 - 3.0 * y * n3 as f64 / n2 as f64;
    let d3 = 3.0 - 4.0 * y * n4 as f64 / n3 as f64;
    if !(0.0..=1.0).contains(&d1) || !(0.0..=2.0).contains(&d2) || !(0.0..=3.0).contains(&d3) {
        return fallback;
    }
    (d1, d2, d3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn corpus(lines: &[&str]) -> TokenizedCorpus {
        TokenizedCorpus::from_lines(lines).unwrap()
    }

    /// Sum of the conditional distribution over every event given a context.
    fn distribution_sum(lm: &ArpaLm, history: &[&str]) -> f64 {
        let mut state = lm.null_state();
        for w in history {
            state = lm.score_word(&state, w).1;
        }
        let events: Vec<String> = lm.events().map(str::to_string).collect();
        events
            .iter()
            .map(|e| 10f64.powf(lm.score_word(&state, e).0))
            .sum()
    }

    #[test]
    fn every_observed_context_normalizes() {
        let c = corpus(&[
            "the cat sat on the mat",
            "the dog sat on the log",
            "a cat and a dog",
            "the cat saw the dog",
        ]);
        for order in [1usize, 2, 3] {
            let lm = train_lm(&c, order, &[]).unwrap();
            // All word histories up to length order-1 observed in the corpus.
            let mut histories: Vec<Vec<&str>> = vec![vec![]];
            for sentence in c.sentences() {
                let toks: Vec<&str> = sentence.iter().map(|s| s.as_str()).collect();
                for len in 1..order {
                    for win in toks.windows(len) {
                        histories.push(win.to_vec());
                    }
                }
            }
            for h in &histories {
                let sum = distribution_sum(&lm, h);
                assert_relative_eq!(sum, 1.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn pruning_preserves_normalization() {
        let c = corpus(&[
            "a b c a b d",
            "a b c a b e",
            "b c d e a",
            "c c c a b",
        ]);
        let lm = train_lm(&c, 3, &[1, 2, 2]).unwrap();
        for h in [vec![], vec!["a"], vec!["a", "b"], vec!["c"], vec!["b", "c"]] {
            assert_relative_eq!(distribution_sum(&lm, &h), 1.0, epsilon = 1e-6);
        }
        // pruned bigrams are gone from the table but still reachable by backoff
        assert!(lm.table_len(2) < train_lm(&c, 3, &[]).unwrap().table_len(2));
    }

    #[test]
    fn closed_form_discounts_used_when_statistics_allow() {
        // counts yielding n1..n4 all positive: 1,1,1,2,2,3,4
        let d = estimate_discounts(vec![1, 1, 1, 2, 2, 3, 4].into_iter(), (0.5, 1.0, 1.5));
        let y = 3.0 / (3.0 + 2.0 * 2.0);
        assert_relative_eq!(d.0, 1.0 - 2.0 * y * 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(d.1, 2.0 - 3.0 * y * 1.0 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(d.2, 3.0 - 4.0 * y * 1.0 / 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_count_of_counts_falls_back() {
        let d = estimate_discounts(vec![2, 2, 2].into_iter(), (0.5, 1.0, 1.5));
        assert_eq!(d, (0.5, 1.0, 1.5));
    }

    #[test]
    fn memorized_corpus_beats_unigram_perplexity() {
        // 50 synthetic sentences with strong local structure.
        let lines: Vec<String> = (0..50)
            .map(|i| {
                let a = ["red", "green", "blue", "dark", "pale"][i % 5];
                let b = ["bird", "fish", "tree", "stone", "cloud"][(i / 5) % 5];
                format!("the {a} {b} returns while the {a} {b} waits")
            })
            .collect();
        let c = TokenizedCorpus::from_lines(&lines).unwrap();
        let high = train_lm(&c, 5, &[]).unwrap();
        let uni = train_lm(&c, 1, &[]).unwrap();
        let p_high = high.perplexity(&c).unwrap();
        let p_uni = uni.perplexity(&c).unwrap();
        assert!(
            p_high < p_uni,
            "memorizing 5-gram should beat unigram: {p_high} vs {p_uni}"
        );
    }

    /// Probability of a repeated sentence is monotone in its count when the
    /// discounts are held fixed. (With re-estimated discounts the
    /// count-of-counts shift as the corpus grows, which can lower it.)
    #[test]
    fn repeated_evidence_does_not_lower_sentence_probability() {
        let bases = [
            vec!["a b c", "b c a", "c a b", "a a b"],
            vec!["how you dey", "you dey fine", "how body", "body dey inside cloth"],
            vec!["one two three four", "two three four five", "five four three two one"],
        ];
        for base in &bases {
            for order in [2usize, 3] {
                let mut opts = TrainOptions::new(order);
                opts.forced_discounts = Some((0.5, 1.0, 1.5));
                let lm0 = train_lm_with(&corpus(base), &opts).unwrap();
                let target: Vec<&str> = base[0].split_whitespace().collect();
                let before = lm0.sentence_logprob(&target);
                let mut repeated = base.clone();
                repeated.push(base[0]);
                let lm1 = train_lm_with(&corpus(&repeated), &opts).unwrap();
                let after = lm1.sentence_logprob(&target);
                assert!(
                    after >= before - 1e-9,
                    "order {order}: {before} -> {after} for {:?}",
                    base[0]
                );
            }
        }
    }

    /// Randomized sweep of the same monotonicity property under fixed
    /// discounts.
    #[test]
    fn repeated_evidence_monotone_on_random_corpora() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let vocab = ["a", "b", "c", "d", "e", "f", "g"];
        for trial in 0..60 {
            let n_sent = rng.gen_range(3..8);
            let lines: Vec<String> = (0..n_sent)
                .map(|_| {
                    let len = rng.gen_range(1..6);
                    (0..len)
                        .map(|_| vocab[rng.gen_range(0..vocab.len())])
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            let order = rng.gen_range(2..4);
            let mut opts = TrainOptions::new(order);
            opts.forced_discounts = Some((0.5, 1.0, 1.5));
            let c0 = corpus(&lines.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            let lm0 = train_lm_with(&c0, &opts).unwrap();
            let target: Vec<&str> = lines[0].split_whitespace().collect();
            let before = lm0.sentence_logprob(&target);
            let mut repeated = lines.clone();
            repeated.push(lines[0].clone());
            let c1 = corpus(&repeated.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            let lm1 = train_lm_with(&c1, &opts).unwrap();
            let after = lm1.sentence_logprob(&target);
            assert!(
                after >= before - 1e-9,
                "trial {trial} order {order}: {before} -> {after} for {:?}",
                lines[0]
            );
        }
    }
}
