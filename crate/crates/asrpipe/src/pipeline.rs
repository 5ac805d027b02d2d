//! Self-improvement stage mechanics: confidence-threshold filtering,
//! language-mismatch removal, and temperature-based sampling weights.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::{strip_language_tag, LanguageTag, ManifestEntry};

/// Entries kept by a filter plus the dropped remainder with reasons.
pub type FilterSplit = (Vec<ManifestEntry>, Vec<(ManifestEntry, DropReason)>);

/// Why an entry was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    Confidence,
    LanguageMismatch,
    Untagged,
    Unscored,
}

#[derive(Debug, Clone)]
pub struct FilterPolicy {
    /// Per-language confidence thresholds in [0, 1].
    pub thresholds: BTreeMap<LanguageTag, f64>,
    /// Drop entries whose text carries no language tag at all.
    pub drop_untagged: bool,
    /// Run the language-mismatch filter.
    pub drop_mismatched: bool,
    /// Keep entries that carry no confidence score. Off by default: an
    /// unscored label has unknown quality.
    pub keep_unscored: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            thresholds: BTreeMap::new(),
            drop_untagged: false,
            drop_mismatched: true,
            keep_unscored: false,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        for (lang, &t) in &self.thresholds {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!(
                    "threshold for {lang} must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Parses `lang=threshold` lines.
    pub fn read_thresholds(path: impl AsRef<Path>) -> Result<BTreeMap<LanguageTag, f64>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lang, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected lang=threshold"))?;
            let lang: LanguageTag = lang
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(path, idx + 1, e.to_string()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad threshold {value}")))?;
            out.insert(lang, value);
        }
        Ok(out)
    }
}

/// Splits entries on per-language confidence thresholds. Entries kept iff
/// `confidence >= thresholds[lang]`; unscored entries pass only under
/// `keep_unscored`.
pub fn filter_by_confidence(entries: Vec<ManifestEntry>, policy: &FilterPolicy) -> Result<FilterSplit> {
    policy.validate()?;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for entry in entries {
        let threshold = *policy
            .thresholds
            .get(&entry.lang)
            .ok_or_else(|| Error::invalid(format!("no threshold for {}", entry.lang)))?;
        match entry.confidence {
            Some(c) if c >= threshold => kept.push(entry),
            Some(_) => dropped.push((entry, DropReason::Confidence)),
            None if policy.keep_unscored => kept.push(entry),
            None => dropped.push((entry, DropReason::Unscored)),
        }
    }
    Ok((kept, dropped))
}

/// Drops entries whose decoder-emitted language tag disagrees with the
/// manifest language; strips the tag from kept texts.
pub fn filter_language_mismatch(entries: Vec<ManifestEntry>, drop_untagged: bool) -> FilterSplit {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for mut entry in entries {
        match strip_language_tag(&entry.text) {
            (Some(tag), rest) if tag == entry.lang => {
                entry.text = rest.to_string();
                kept.push(entry);
            }
            (Some(_), _) => dropped.push((entry, DropReason::LanguageMismatch)),
            (None, _) if drop_untagged => dropped.push((entry, DropReason::Untagged)),
            (None, _) => kept.push(entry),
        }
    }
    (kept, dropped)
}

/// Sampling spec: per-key example counts (or durations) plus a temperature.
#[derive(Debug, Clone)]
pub struct MixSpec {
    pub counts: BTreeMap<String, f64>,
    pub temperature: f64,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.counts.values().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::invalid("counts must be finite and nonnegative"));
        }
        if !self.counts.values().any(|&c| c > 0.0) {
            return Err(Error::invalid("at least one count must be positive"));
        }
        Ok(())
    }
}

/// Temperature sampling weights: `p_i = (n_i/N)^(1/T)` renormalized to sum
/// to one. T=1 is proportional sampling; large T flattens toward uniform.
pub fn temperature_weights(spec: &MixSpec) -> Result<BTreeMap<String, f64>> {
    spec.validate()?;
    let total: f64 = spec.counts.values().sum();
    let powered: BTreeMap<&String, f64> = spec
        .counts
        .iter()
        .map(|(k, &c)| (k, (c / total).powf(1.0 / spec.temperature)))
        .collect();
    let norm: f64 = powered.values().sum();
    Ok(powered
        .into_iter()
        .map(|(k, p)| (k.clone(), p / norm))
        .collect())
}

#[derive(Debug, Clone, Copy, Default, Serialize, PartialEq)]
pub struct LangStats {
    pub kept: u64,
    pub dropped_confidence: u64,
    pub dropped_language: u64,
    pub dropped_unscored: u64,
    pub dropped_untagged: u64,
    pub hours: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub schema_version: u32,
    pub languages: BTreeMap<String, LangStats>,
    pub total: LangStats,
}

#[derive(Debug)]
pub struct StageOutcome {
    pub kept: Vec<ManifestEntry>,
    pub dropped: Vec<(ManifestEntry, DropReason)>,
    pub report: StageReport,
}

/// Composes the confidence and language filters (confidence first; the kept
/// set is order-independent) and accumulates per-language statistics.
pub fn run_stage(entries: Vec<ManifestEntry>, policy: &FilterPolicy) -> Result<StageOutcome> {
    let (after_conf, mut dropped) = filter_by_confidence(entries, policy)?;
    let kept = if policy.drop_mismatched {
        let (kept, lang_dropped) = filter_language_mismatch(after_conf, policy.drop_untagged);
        dropped.extend(lang_dropped);
        kept
    } else {
        after_conf
    };

    let mut languages: BTreeMap<String, LangStats> = BTreeMap::new();
    let mut total = LangStats::default();
    for entry in &kept {
        let stats = languages.entry(entry.lang.code().to_string()).or_default();
        stats.kept += 1;
        stats.hours += entry.duration_s / 3600.0;
        total.kept += 1;
        total.hours += entry.duration_s / 3600.0;
    }
    for (entry, reason) in &dropped {
        let stats = languages.entry(entry.lang.code().to_string()).or_default();
        let slot = match reason {
            DropReason::Confidence => &mut stats.dropped_confidence,
            DropReason::LanguageMismatch => &mut stats.dropped_language,
            DropReason::Untagged => &mut stats.dropped_untagged,
            DropReason::Unscored => &mut stats.dropped_unscored,
        };
        *slot += 1;
        match reason {
            DropReason::Confidence => total.dropped_confidence += 1,
            DropReason::LanguageMismatch => total.dropped_language += 1,
            DropReason::Untagged => total.dropped_untagged += 1,
            DropReason::Unscored => total.dropped_unscored += 1,
        }
    }
    for stats in languages.values_mut() {
        stats.hours = (stats.hours * 1e6).round() / 1e6;
    }
    total.hours = (total.hours * 1e6).round() / 1e6;

    Ok(StageOutcome {
        kept,
        dropped,
        report: StageReport {
            schema_version: 1,
            languages,
            total,
        },
    })
}
