//! Speaking-rate robustness harness: WSOLA-stretch every test utterance at
//! each factor, re-decode, and pool WER per factor.

use std::path::{Path, PathBuf};

use crate::audio::{read_wav, wsola_stretch, Waveform};
use crate::error::{Error, Result};
use crate::manifest::ManifestEntry;

use super::{corpus_wer, WerBreakdown};

pub const DEFAULT_SWEEP_FACTORS: [f64; 7] = [0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0];

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub factor: f64,
    pub breakdown: WerBreakdown,
}

/// Runs the sweep. `decode` receives the stretch factor, the manifest entry,
/// and the stretched waveform, and returns a hypothesis transcript. Factor
/// 1.0 bypasses the stretcher so its row scores the unmodified test set
/// exactly.
pub fn speed_sweep<F>(
    entries: &[ManifestEntry],
    audio_root: &Path,
    factors: &[f64],
    mut decode: F,
) -> Result<Vec<SweepPoint>>
where
    F: FnMut(f64, &ManifestEntry, &Waveform) -> Result<String>,
{
    if entries.is_empty() {
        return Err(Error::invalid("sweep needs at least one utterance"));
    }
    let paths: Vec<PathBuf> = entries
        .iter()
        .map(|e| {
            let p = Path::new(&e.audio_path);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                audio_root.join(p)
            }
        })
        .collect();
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "missing audio files: {}",
            missing.join(", ")
        )));
    }

    let waves: Vec<Waveform> = paths
        .iter()
        .map(read_wav)
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(factors.len());
    for &factor in factors {
        let mut pairs: Vec<(String, String)> = Vec::with_capacity(entries.len());
        for (entry, wave) in entries.iter().zip(&waves) {
            let stretched;
            let audio = if factor == 1.0 {
                wave
            } else {
                stretched = wsola_stretch(wave, factor)?;
                &stretched
            };
            let hyp = decode(factor, entry, audio)?;
            pairs.push((entry.text.clone(), hyp));
        }
        points.push(SweepPoint {
            factor,
            breakdown: corpus_wer(&pairs)?,
        });
    }
    Ok(points)
}

/// Plot-ready CSV: `factor,wer` with four decimals.
pub fn render_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("factor,wer\n");
    for p in points {
        out.push_str(&format!("{},{:.4}\n", p.factor, p.breakdown.rate()));
    }
    out
}
