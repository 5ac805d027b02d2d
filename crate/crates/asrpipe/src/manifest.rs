//! Utterance records and the JSONL manifest format shared by every pipeline
//! stage.
//!
//! A manifest is UTF-8 text with one JSON object per LF-terminated line.
//! Required keys: `audio_path`, `duration_s`, `text`, `lang`. Optional:
//! `confidence`, `source`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the five supported languages, rendered as a `<|xx|>` tag token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LanguageTag {
    En,
    Ig,
    Yo,
    Pd,
    Ha,
}

impl LanguageTag {
    pub const ALL: [LanguageTag; 5] = [
        LanguageTag::En,
        LanguageTag::Ig,
        LanguageTag::Yo,
        LanguageTag::Pd,
        LanguageTag::Ha,
    ];

    /// Two-letter code used in manifest `lang` fields.
    pub fn code(self) -> &'static str {
        match self {
            LanguageTag::En => "en",
            LanguageTag::Ig => "ig",
            LanguageTag::Yo => "yo",
            LanguageTag::Pd => "pd",
            LanguageTag::Ha => "ha",
        }
    }

    /// Literal tag token prepended to transcripts, e.g. `<|pd|>`.
    pub fn token(self) -> &'static str {
        match self {
            LanguageTag::En => "<|en|>",
            LanguageTag::Ig => "<|ig|>",
            LanguageTag::Yo => "<|yo|>",
            LanguageTag::Pd => "<|pd|>",
            LanguageTag::Ha => "<|ha|>",
        }
    }

    /// Parses a manifest code. `pcm` is accepted as an alias for `pd`.
    pub fn parse_code(s: &str) -> Option<LanguageTag> {
        match s {
            "en" => Some(LanguageTag::En),
            "ig" => Some(LanguageTag::Ig),
            "yo" => Some(LanguageTag::Yo),
            "pd" | "pcm" => Some(LanguageTag::Pd),
            "ha" => Some(LanguageTag::Ha),
            _ => None,
        }
    }

    /// Parses a `<|xx|>` tag token. Any other string, including unknown
    /// `<|..|>` forms, yields `None`.
    pub fn parse_token(s: &str) -> Option<LanguageTag> {
        LanguageTag::ALL.iter().copied().find(|t| t.token() == s)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        LanguageTag::parse_code(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown language \"{s}\"")))
    }
}

impl std::str::FromStr for LanguageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LanguageTag::parse_code(s).ok_or_else(|| Error::invalid(format!("unknown language \"{s}\"")))
    }
}

/// One utterance record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub audio_path: String,
    pub duration_s: f64,
    pub text: String,
    pub lang: LanguageTag,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "round6_opt"
    )]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

fn round6_opt<S: serde::Serializer>(
    v: &Option<f64>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    // confidence is serialized with at most 6 decimal digits
    ser.serialize_f64((v.unwrap() * 1e6).round() / 1e6)
}

impl ManifestEntry {
    /// Checks the record invariants: nonnegative duration, confidence in
    /// (0, 1] when present, no raw newlines in the text.
    pub fn validate(&self) -> Result<()> {
        if !self.duration_s.is_finite() || self.duration_s < 0.0 {
            return Err(Error::invalid(format!(
                "duration_s must be a nonnegative number, got {}",
                self.duration_s
            )));
        }
        if let Some(c) = self.confidence {
            if !c.is_finite() || c <= 0.0 || c > 1.0 {
                return Err(Error::invalid(format!(
                    "confidence must lie in (0, 1], got {c}"
                )));
            }
        }
        if self.text.contains('\n') || self.text.contains('\r') {
            return Err(Error::invalid("text must not contain raw newlines"));
        }
        Ok(())
    }
}

/// Streaming manifest reader; yields entries in file order with one entry
/// held in memory at a time.
pub struct ManifestReader {
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    line_no: usize,
}

impl ManifestReader {
    pub fn open(path: impl AsRef<Path>) -> Result<ManifestReader> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(ManifestReader {
            path,
            lines: BufReader::new(file).lines(),
            line_no: 0,
        })
    }

    fn parse_line(&self, line: &str) -> Result<ManifestEntry> {
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| {
            let msg = e.to_string();
            let msg = if msg.contains("unknown language") {
                format!("unknown language at line {}", self.line_no)
            } else {
                format!("malformed manifest line: {msg}")
            };
            Error::parse(&self.path, self.line_no, msg)
        })?;
        entry
            .validate()
            .map_err(|e| Error::parse(&self.path, self.line_no, e.to_string()))?;
        Ok(entry)
    }
}

impl Iterator for ManifestReader {
    type Item = Result<ManifestEntry>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(self.parse_line(&line));
                }
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
        }
    }
}

/// Reads a whole manifest into memory, preserving file order.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    ManifestReader::open(path)?.collect()
}

/// Writes entries as JSONL with LF line endings. Inverse of [`read_manifest`].
pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for entry in entries {
        entry.validate()?;
        let line = serde_json::to_string(entry)
            .map_err(|e| Error::invalid(format!("serialize manifest entry: {e}")))?;
        w.write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Prepends `<|xx|> ` to an untagged text. Tagging twice is a caller error
/// and is rejected.
pub fn prepend_language_tag(text: &str, lang: LanguageTag) -> Result<String> {
    if strip_language_tag(text).0.is_some() {
        return Err(Error::invalid(format!(
            "text is already tagged: {:?}",
            text.split_whitespace().next().unwrap_or("")
        )));
    }
    Ok(format!("{} {}", lang.token(), text))
}

/// Splits a leading `<|xx|>` tag off a text. Unknown tags are left in place.
///
/// Returns the parsed tag (if any) and the remainder with one leading space
/// removed.
pub fn strip_language_tag(text: &str) -> (Option<LanguageTag>, &str) {
    for tag in LanguageTag::ALL {
        let token = tag.token();
        if let Some(rest) = text.strip_prefix(token) {
            // tag must end the text or be followed by whitespace
            if rest.is_empty() {
                return (Some(tag), rest);
            }
            if let Some(stripped) = rest.strip_prefix(' ') {
                return (Some(tag), stripped);
            }
        }
    }
    (None, text)
}
