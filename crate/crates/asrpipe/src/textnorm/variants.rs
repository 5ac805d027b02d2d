//! Longest-match phrase replacement over a curated variant table.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered source-phrase to replacement-phrase mapping applied with
/// left-to-right longest-match, whole-word semantics in a single pass.
///
/// The table must be closed: no replacement, when run back through the
/// table, may change again. This is checked at construction, which makes
/// application idempotent entry-wise.
#[derive(Debug, Clone)]
pub struct VariantTable {
    /// by_len[n-1] maps n-word source phrases (space-joined) to replacements.
    by_len: Vec<HashMap<String, String>>,
    entries: Vec<(String, String)>,
}

impl VariantTable {
    pub fn from_pairs<I>(pairs: I) -> Result<VariantTable>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut entries = Vec::new();
        let mut by_len: Vec<HashMap<String, String>> = Vec::new();
        for (src, dst) in pairs {
            let src = src.split_whitespace().collect::<Vec<_>>().join(" ");
            let dst = dst.split_whitespace().collect::<Vec<_>>().join(" ");
            if src.is_empty() || dst.is_empty() {
                return Err(Error::invalid("variant table entries must be non-empty"));
            }
            let n = src.split(' ').count();
            if by_len.len() < n {
                by_len.resize_with(n, HashMap::new);
            }
            if by_len[n - 1].insert(src.clone(), dst.clone()).is_some() {
                return Err(Error::invalid(format!("duplicate variant source \"{src}\"")));
            }
            entries.push((src, dst));
        }
        let table = VariantTable { by_len, entries };
        // closure check: every replacement must be a fixed point
        for (src, dst) in &table.entries {
            let applied = table.apply(dst);
            if &applied != dst {
                return Err(Error::invalid(format!(
                    "variant table is not closed: \"{src}\" -> \"{dst}\" -> \"{applied}\""
                )));
            }
        }
        Ok(table)
    }

    /// Reads a `source<TAB>replacement` file.
    pub fn read(path: impl AsRef<Path>) -> Result<VariantTable> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| {
                Error::parse(path, idx + 1, "expected source<TAB>replacement")
            })?;
            pairs.push((src.to_string(), dst.to_string()));
        }
        VariantTable::from_pairs(pairs)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, d)| (s.as_str(), d.as_str()))
    }

    fn max_phrase_len(&self) -> usize {
        self.by_len.len()
    }

    /// Left-to-right, longest-match, single-pass whole-word replacement.
    /// Word boundaries are spaces; the input is expected to be preprocessed.
    pub fn apply(&self, text: &str) -> String {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let mut out: Vec<&str> = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let longest = self.max_phrase_len().min(tokens.len() - i);
            let mut matched = false;
            for n in (1..=longest).rev() {
                let phrase = tokens[i..i + n].join(" ");
                if let Some(dst) = self.by_len[n - 1].get(&phrase) {
                    out.extend(dst.split(' '));
                    i += n;
                    matched = true;
                    break;
                }
            }
            if !matched {
                out.push(tokens[i]);
                i += 1;
            }
        }
        out.join(" ")
    }
}

/// Applies the variant table to a preprocessed text.
pub fn apply_variants(text: &str, table: &VariantTable) -> String {
    table.apply(text)
}
