//! LM-driven disambiguation of homophones that differ in meaning.
//!
//! Sets sharing a member are merged at load time so every word belongs to
//! at most one active set. Multi-word members are kept in the set listing
//! but never participate in substitution, which operates token-wise.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lm::ArpaLm;

#[derive(Debug, Clone)]
pub struct HomophoneSets {
    raw: Vec<Vec<String>>,
    merged: Vec<Vec<String>>,
    /// single-token member -> index into `merged`
    index: HashMap<String, usize>,
}

impl HomophoneSets {
    pub fn from_sets(sets: Vec<Vec<String>>) -> Result<HomophoneSets> {
        for set in &sets {
            if set.len() < 2 {
                return Err(Error::invalid(format!(
                    "homophone set must have at least two members: {set:?}"
                )));
            }
            if set.iter().any(|m| m.is_empty()) {
                return Err(Error::invalid("homophone set member is empty"));
            }
        }

        // union-find over raw sets, joined by shared members
        let mut parent: Vec<usize> = (0..sets.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        let mut owner: HashMap<&str, usize> = HashMap::new();
        for (i, set) in sets.iter().enumerate() {
            for member in set {
                match owner.get(member.as_str()) {
                    Some(&j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a] = b;
                        }
                    }
                    None => {
                        owner.insert(member, i);
                    }
                }
            }
        }

        let mut groups: HashMap<usize, Vec<String>> = HashMap::new();
        for (i, set) in sets.iter().enumerate() {
            let root = find(&mut parent, i);
            let group = groups.entry(root).or_default();
            for member in set {
                if !group.contains(member) {
                    group.push(member.clone());
                }
            }
        }
        let mut merged: Vec<Vec<String>> = groups.into_values().collect();
        merged.sort_by(|a, b| a[0].cmp(&b[0]));

        let mut index = HashMap::new();
        for (i, group) in merged.iter().enumerate() {
            for member in group {
                if !member.contains(' ') {
                    index.insert(member.clone(), i);
                }
            }
        }
        Ok(HomophoneSets {
            raw: sets,
            merged,
            index,
        })
    }

    /// Reads one set per line, members separated by ` | `.
    pub fn read(path: impl AsRef<Path>) -> Result<HomophoneSets> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut sets = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let members: Vec<String> = line
                .split('|')
                .map(|m| m.split_whitespace().collect::<Vec<_>>().join(" "))
                .collect();
            if members.iter().any(|m| m.is_empty()) {
                return Err(Error::parse(path, idx + 1, "empty homophone member"));
            }
            sets.push(members);
        }
        HomophoneSets::from_sets(sets)
    }

    /// The sets exactly as listed in the source file.
    pub fn raw_sets(&self) -> &[Vec<String>] {
        &self.raw
    }

    /// Sets after merging on shared members.
    pub fn merged_sets(&self) -> &[Vec<String>] {
        &self.merged
    }

    /// Single-token candidates competing with `token`, including itself.
    /// `None` when the token belongs to no set.
    pub fn candidates_for(&self, token: &str) -> Option<Vec<&str>> {
        let &i = self.index.get(token)?;
        Some(
            self.merged[i]
                .iter()
                .filter(|m| !m.contains(' '))
                .map(String::as_str)
                .collect(),
        )
    }
}

/// Replaces each token belonging to a homophone set with the candidate the
/// LM scores highest over a ±`window`-word context. Ties keep the original
/// token. Tokens are processed left to right with earlier decisions fixed.
pub fn disambiguate_homophones(
    text: &str,
    sets: &HomophoneSets,
    lm: &ArpaLm,
    window: usize,
) -> String {
    let mut tokens: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
    for i in 0..tokens.len() {
        let candidates = match sets.candidates_for(&tokens[i]) {
            Some(c) if c.len() >= 2 => c.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            _ => continue,
        };
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(tokens.len());
        let mut slice: Vec<String> = tokens[lo..hi].to_vec();
        let pos = i - lo;

        let original = tokens[i].clone();
        slice[pos] = original.clone();
        let mut best_score = lm.sentence_logprob(&slice);
        let mut best = original;
        for cand in candidates {
            if cand == best {
                continue;
            }
            slice[pos] = cand.clone();
            let score = lm.sentence_logprob(&slice);
            if score > best_score {
                best_score = score;
                best = cand;
            }
        }
        tokens[i] = best;
    }
    tokens.join(" ")
}
