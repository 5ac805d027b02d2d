//! ARPA text format: `\data\` header with per-order counts, `\k-grams:`
//! sections holding `log10_prob<TAB>w1 .. wk<TAB>log10_backoff` lines
//! (backoff omitted at the highest order), closed by `\end\`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ArpaLm, Gram};

/// Writes the model as ARPA text. Entries are sorted by their words so the
/// output is deterministic.
pub fn write_arpa(lm: &ArpaLm, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let result: std::io::Result<()> = (|| {
        writeln!(w, "\\data\\")?;
        for k in 1..=lm.order {
            writeln!(w, "ngram {k}={}", lm.tables[k - 1].len())?;
        }
        for k in 1..=lm.order {
            writeln!(w, "\n\\{k}-grams:")?;
            let mut entries: Vec<(String, &Gram)> = lm.tables[k - 1]
                .iter()
                .map(|(gram, entry)| {
                    let text = gram
                        .iter()
                        .map(|&id| lm.words[id as usize].as_str())
                        .collect::<Vec<_>>()
                        .join(" ");
                    (text, entry)
                })
                .collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            for (text, entry) in entries {
                if k < lm.order {
                    writeln!(
                        w,
                        "{:.7}\t{}\t{:.7}",
                        entry.log10_prob, text, entry.log10_backoff
                    )?;
                } else {
                    writeln!(w, "{:.7}\t{}", entry.log10_prob, text)?;
                }
            }
        }
        writeln!(w, "\n\\end\\")?;
        w.flush()
    })();
    result.map_err(|e| Error::io(path, e))
}

/// Parses an ARPA file. Count declarations in `\data\` must match the
/// number of entries in each section.
pub fn read_arpa(path: impl AsRef<Path>) -> Result<ArpaLm> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut words: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let intern = |w: &str, words: &mut Vec<String>, ids: &mut HashMap<String, u32>| -> u32 {
        if let Some(&id) = ids.get(w) {
            return id;
        }
        let id = words.len() as u32;
        words.push(w.to_string());
        ids.insert(w.to_string(), id);
        id
    };

    let mut declared: Vec<usize> = Vec::new();
    let mut tables: Vec<HashMap<Box<[u32]>, Gram>> = Vec::new();
    let mut section: Option<usize> = None; // current k
    let mut seen_data = false;
    let mut seen_end = false;

    let err = |line: usize, msg: String| Error::parse(path, line, msg);

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if seen_end {
            return Err(err(line_no, "content after \\end\\".into()));
        }
        if trimmed == "\\data\\" {
            if seen_data {
                return Err(err(line_no, "duplicate \\data\\ header".into()));
            }
            seen_data = true;
            continue;
        }
        if trimmed == "\\end\\" {
            finish_section(path, line_no, section, &declared, &tables)?;
            seen_end = true;
            continue;
        }
        if !seen_data {
            return Err(err(line_no, "expected \\data\\ header".into()));
        }
        if let Some(rest) = trimmed.strip_prefix("ngram ") {
            if section.is_some() {
                return Err(err(line_no, "ngram declaration inside a section".into()));
            }
            let (k_str, n_str) = rest
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("malformed ngram declaration: {trimmed}")))?;
            let k: usize = k_str
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("malformed ngram order: {k_str}")))?;
            let n: usize = n_str
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("malformed ngram count: {n_str}")))?;
            if k != declared.len() + 1 {
                return Err(err(
                    line_no,
                    format!("ngram orders must be contiguous from 1, got {k}"),
                ));
            }
            declared.push(n);
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('\\') {
            if let Some(k_str) = rest.strip_suffix("-grams:") {
                let k: usize = k_str
                    .parse()
                    .map_err(|_| err(line_no, format!("malformed section header: {trimmed}")))?;
                finish_section(path, line_no, section, &declared, &tables)?;
                if k != tables.len() + 1 {
                    return Err(err(
                        line_no,
                        format!("sections must appear in order; expected \\{}-grams:", tables.len() + 1),
                    ));
                }
                if k > declared.len() {
                    return Err(err(line_no, format!("section \\{k}-grams: not declared in \\data\\")));
                }
                tables.push(HashMap::new());
                section = Some(k);
                continue;
            }
            return Err(err(line_no, format!("unrecognized section header: {trimmed}")));
        }

        let k = section.ok_or_else(|| err(line_no, "entry outside any \\k-grams: section".into()))?;
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(err(
                line_no,
                format!(
                    "expected {} or {} fields for a {k}-gram entry, found {}",
                    k + 1,
                    k + 2,
                    fields.len()
                ),
            ));
        }
        let log10_prob: f64 = fields[0]
            .parse()
            .map_err(|_| err(line_no, format!("malformed probability: {}", fields[0])))?;
        if log10_prob > 1e-4 {
            return Err(err(line_no, format!("probability above 1: 10^{log10_prob}")));
        }
        let log10_backoff: f64 = if fields.len() == k + 2 {
            fields[k + 1]
                .parse()
                .map_err(|_| err(line_no, format!("malformed backoff: {}", fields[k + 1])))?
        } else {
            0.0
        };
        let gram: Box<[u32]> = fields[1..=k]
            .iter()
            .map(|w| intern(w, &mut words, &mut ids))
            .collect();
        if tables[k - 1]
            .insert(
                gram,
                Gram {
                    log10_prob,
                    log10_backoff,
                },
            )
            .is_some()
        {
            return Err(err(line_no, format!("duplicate {k}-gram entry")));
        }
    }

    if !seen_end {
        return Err(Error::format(path, "missing \\end\\ terminator"));
    }
    if tables.len() != declared.len() {
        return Err(Error::format(
            path,
            format!(
                "\\data\\ declares {} orders but {} sections present",
                declared.len(),
                tables.len()
            ),
        ));
    }
    if tables.is_empty() {
        return Err(Error::format(path, "model declares no n-gram orders"));
    }
    let order = tables.len();
    Ok(ArpaLm::new(order, words, tables))
}

fn finish_section(
    path: &Path,
    line_no: usize,
    section: Option<usize>,
    declared: &[usize],
    tables: &[HashMap<Box<[u32]>, Gram>],
) -> Result<()> {
    if let Some(k) = section {
        let expected = declared[k - 1];
        let found = tables[k - 1].len();
        if expected != found {
            return Err(Error::parse(
                path,
                line_no,
                format!("ngram {k}={expected} declared but {found} entries present"),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{train_lm, TokenizedCorpus};
    use tempfile::tempdir;

    #[test]
    fn round_trip_preserves_probabilities() {
        let corpus = TokenizedCorpus::from_lines(["a b", "a b"]).unwrap();
        let lm = train_lm(&corpus, 2, &[]).unwrap();
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.arpa");
        write_arpa(&lm, &p).unwrap();
        let back = read_arpa(&p).unwrap();
        assert_eq!(back.order(), 2);
        for sentence in [vec!["a", "b"], vec!["b"], vec!["a", "a", "b"]] {
            let diff = (lm.sentence_logprob(&sentence) - back.sentence_logprob(&sentence)).abs();
            assert!(diff < 1e-4, "sentence {sentence:?} drifted by {diff}");
        }
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let text = "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\ta\t0\n-0.5\tb\t0\n\n\\end\\\n";
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.arpa");
        std::fs::write(&p, text).unwrap();
        let e = read_arpa(&p).unwrap_err().to_string();
        assert!(e.contains("ngram 1=3"), "{e}");
    }

    #[test]
    fn malformed_header_names_line() {
        let text = "\\data\\\nngram one=3\n\\end\\\n";
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.arpa");
        std::fs::write(&p, text).unwrap();
        let e = read_arpa(&p).unwrap_err().to_string();
        assert!(e.contains(":2:"), "{e}");
    }

    #[test]
    fn missing_end_is_an_error() {
        let text = "\\data\\\nngram 1=1\n\n\\1-grams:\n-0.5\ta\t0\n";
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.arpa");
        std::fs::write(&p, text).unwrap();
        assert!(read_arpa(&p).is_err());
    }

    #[test]
    fn five_gram_round_trip() {
        let corpus = TokenizedCorpus::from_lines([
            "one two three four five",
            "two three four five six",
            "one two three five four",
        ])
        .unwrap();
        let lm = train_lm(&corpus, 5, &[]).unwrap();
        let dir = tempdir().unwrap();
        let p = dir.path().join("m5.arpa");
        write_arpa(&lm, &p).unwrap();
        let back = read_arpa(&p).unwrap();
        assert_eq!(back.order(), 5);
        let s = vec!["one", "two", "three", "four", "five"];
        assert!((lm.sentence_logprob(&s) - back.sentence_logprob(&s)).abs() < 1e-4);
    }
}
