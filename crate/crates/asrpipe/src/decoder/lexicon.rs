//! Token trie constraining beam expansion to known word spellings.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
struct Node {
    children: HashMap<u32, usize>,
    word: Option<u32>,
}

/// Maps token-index sequences to words. Every word is reachable by exactly
/// the spellings inserted for it; a spelling may name only one word.
#[derive(Debug, Default)]
pub struct Lexicon {
    nodes: Vec<Node>,
    words: Vec<String>,
}

impl Lexicon {
    pub fn new() -> Lexicon {
        Lexicon {
            nodes: vec![Node::default()],
            words: Vec::new(),
        }
    }

    pub const ROOT: usize = 0;

    pub fn insert(&mut self, word: &str, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::invalid(format!("empty spelling for word \"{word}\"")));
        }
        let mut node = Self::ROOT;
        for &t in tokens {
            let next = match self.nodes[node].children.get(&t) {
                Some(&n) => n,
                None => {
                    self.nodes.push(Node::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[node].children.insert(t, n);
                    n
                }
            };
            node = next;
        }
        if let Some(existing) = self.nodes[node].word {
            let existing = &self.words[existing as usize];
            if existing != word {
                return Err(Error::invalid(format!(
                    "spelling conflict: words \"{existing}\" and \"{word}\" share a token sequence"
                )));
            }
            return Ok(());
        }
        let id = match self.words.iter().position(|w| w == word) {
            Some(i) => i as u32,
            None => {
                self.words.push(word.to_string());
                (self.words.len() - 1) as u32
            }
        };
        self.nodes[node].word = Some(id);
        Ok(())
    }

    /// Reads `word<TAB>token token token` lines, resolving token strings
    /// against the emission vocabulary.
    pub fn read(path: impl AsRef<Path>, vocab: &[String]) -> Result<Lexicon> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let token_ids: HashMap<&str, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
            .collect();
        let mut lex = Lexicon::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, spelling) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>tokens"))?;
            let mut tokens = Vec::new();
            for tok in spelling.split_whitespace() {
                let id = token_ids.get(tok).ok_or_else(|| {
                    Error::parse(path, idx + 1, format!("token \"{tok}\" not in vocabulary"))
                })?;
                tokens.push(*id);
            }
            lex.insert(word, &tokens)
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn child(&self, node: usize, token: u32) -> Option<usize> {
        self.nodes[node].children.get(&token).copied()
    }

    pub fn word_at(&self, node: usize) -> Option<&str> {
        self.nodes[node]
            .word
            .map(|id| self.words[id as usize].as_str())
    }

    pub fn word_id_at(&self, node: usize) -> Option<u32> {
        self.nodes[node].word
    }

    pub fn word_string(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }
}
