//! Waveform-similarity overlap-add time-scale modification: changes speed
//! while preserving pitch.

use crate::error::{Error, Result};

use super::Waveform;

const WINDOW: usize = 512;
const SYNTHESIS_HOP: usize = WINDOW / 2;
const TOLERANCE: usize = 128;

/// Speeds the signal up by `factor` (output duration = input / factor),
/// preserving pitch. Supported range: 0.5 to 2.5.
///
/// Output frames advance by a fixed synthesis hop while analysis frames are
/// taken near `factor`-scaled positions, shifted within a tolerance to
/// maximize cross-correlation with the natural continuation of the previous
/// frame, then Hann-windowed and overlap-added.
pub fn wsola_stretch(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(0.5..=2.5).contains(&factor) {
        return Err(Error::invalid(format!(
            "stretch factor must lie in [0.5, 2.5], got {factor}"
        )));
    }
    if factor == 1.0 {
        return Ok(w.clone());
    }
    if w.samples.len() < WINDOW + TOLERANCE {
        return Err(Error::invalid(format!(
            "input too short for WSOLA: {} samples, need at least {}",
            w.samples.len(),
            WINDOW + TOLERANCE
        )));
    }

    let out_len = (w.samples.len() as f64 / factor).round() as usize;
    // zero padding lets the last frames read past the signal tail
    let mut input = w.samples.clone();
    input.extend(std::iter::repeat_n(0.0, WINDOW + TOLERANCE));

    let window: Vec<f32> = (0..WINDOW)
        .map(|i| {
            let phase = std::f32::consts::PI * i as f32 / WINDOW as f32;
            phase.sin() * phase.sin()
        })
        .collect();

    let frames = out_len.div_ceil(SYNTHESIS_HOP) + 1;
    let mut output = vec![0.0f32; frames * SYNTHESIS_HOP + WINDOW];
    let mut weight = vec![0.0f32; output.len()];

    let analysis_hop = SYNTHESIS_HOP as f64 * factor;
    let max_start = input.len() - WINDOW;
    let mut prev_start = 0usize;
    for k in 0..frames {
        let start = if k == 0 {
            0
        } else {
            let ideal = (k as f64 * analysis_hop).round() as usize;
            let ideal = ideal.min(max_start);
            let natural = (prev_start + SYNTHESIS_HOP).min(max_start);
            best_offset(&input, ideal, natural, max_start)
        };
        let out_pos = k * SYNTHESIS_HOP;
        for i in 0..WINDOW {
            output[out_pos + i] += input[start + i] * window[i];
            weight[out_pos + i] += window[i];
        }
        prev_start = start;
    }

    let mut samples: Vec<f32> = output
        .iter()
        .zip(&weight)
        .map(|(&s, &w)| if w > 1e-3 { s / w } else { s })
        .collect();
    samples.truncate(out_len);
    Waveform::new(samples, w.sample_rate)
}

/// Candidate start within ±TOLERANCE of `ideal` whose window correlates
/// best with the natural continuation frame at `natural`.
fn best_offset(input: &[f32], ideal: usize, natural: usize, max_start: usize) -> usize {
    let lo = ideal.saturating_sub(TOLERANCE);
    let hi = (ideal + TOLERANCE).min(max_start);
    let target = &input[natural..natural + WINDOW];
    let mut best = ideal;
    let mut best_score = f64::NEG_INFINITY;
    for cand in lo..=hi {
        let frame = &input[cand..cand + WINDOW];
        let score: f64 = frame
            .iter()
            .zip(target)
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        if score > best_score {
            best_score = score;
            best = cand;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::DEFAULT_SAMPLE_RATE;

    fn sine(duration_s: f64, freq: f32) -> Waveform {
        let n = (duration_s * DEFAULT_SAMPLE_RATE as f64) as usize;
        let samples = (0..n)
            .map(|i| {
                (2.0 * std::f32::consts::PI * freq * i as f32 / DEFAULT_SAMPLE_RATE as f32).sin()
                    * 0.5
            })
            .collect();
        Waveform::new(samples, DEFAULT_SAMPLE_RATE).unwrap()
    }

    /// Dominant frequency by counting sign changes over the steady middle
    /// portion of the signal.
    fn zero_crossing_freq(w: &Waveform) -> f64 {
        let n = w.samples.len();
        let mid = &w.samples[n / 4..3 * n / 4];
        let crossings = mid
            .windows(2)
            .filter(|p| (p[0] >= 0.0) != (p[1] >= 0.0))
            .count();
        let span = mid.len() as f64 / w.sample_rate as f64;
        crossings as f64 / (2.0 * span)
    }

    #[test]
    fn factor_one_is_identity() {
        let w = sine(1.0, 440.0);
        let out = wsola_stretch(&w, 1.0).unwrap();
        assert_eq!(out.samples, w.samples);
    }

    #[test]
    fn duration_and_pitch_across_sweep_grid() {
        let w = sine(3.0, 440.0);
        for &f in &[0.8, 1.2, 1.4, 1.6, 1.8, 2.0] {
            let out = wsola_stretch(&w, f).unwrap();
            let expected = w.duration_s() / f;
            let ratio = out.duration_s() / expected;
            assert!(
                (ratio - 1.0).abs() < 0.02,
                "factor {f}: duration ratio {ratio}"
            );
            let freq = zero_crossing_freq(&out);
            assert!(
                (freq - 440.0).abs() / 440.0 < 0.01,
                "factor {f}: pitch drifted to {freq}"
            );
        }
    }

    #[test]
    fn out_of_range_factor_rejected() {
        let w = sine(1.0, 440.0);
        assert!(wsola_stretch(&w, 0.4).is_err());
        assert!(wsola_stretch(&w, 2.6).is_err());
    }

    #[test]
    fn augmentation_factor_set_supported() {
        let w = sine(1.0, 220.0);
        for &f in &[0.9, 1.0, 1.1, 1.2] {
            let out = wsola_stretch(&w, f).unwrap();
            let ratio = out.duration_s() / (w.duration_s() / f);
            assert!((ratio - 1.0).abs() < 0.02, "factor {f}: {ratio}");
        }
    }
}
