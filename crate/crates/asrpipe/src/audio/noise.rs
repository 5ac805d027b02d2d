//! SNR-controlled additive noise mixing.

use crate::error::{Error, Result};

use super::Waveform;

/// Result of a noise mix: the clipped output plus how many samples clipped.
#[derive(Debug, Clone)]
pub struct NoiseMix {
    pub waveform: Waveform,
    pub clipped_samples: usize,
}

/// Adds `noise` (looped or truncated to the signal length) scaled so the
/// signal-to-noise power ratio equals `snr_db`. Output samples are clipped
/// to [-1, 1]. An infinite `snr_db` disables mixing and returns the signal
/// unchanged.
pub fn mix_noise(w: &Waveform, noise: &Waveform, snr_db: f64) -> Result<NoiseMix> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(NoiseMix {
            waveform: w.clone(),
            clipped_samples: 0,
        });
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("snr_db must be finite, got {snr_db}")));
    }
    if w.sample_rate != noise.sample_rate {
        return Err(Error::invalid(format!(
            "sample rate mismatch ({} vs {}); resampling is out of scope",
            w.sample_rate, noise.sample_rate
        )));
    }
    if noise.samples.is_empty() {
        return Err(Error::invalid("noise waveform is empty"));
    }

    // power of the noise as looped/truncated over the signal length
    let looped: Vec<f32> = noise
        .samples
        .iter()
        .cycle()
        .take(w.samples.len())
        .copied()
        .collect();
    let p_signal = w.power();
    let p_noise = looped.iter().map(|&s| s as f64 * s as f64).sum::<f64>()
        / looped.len().max(1) as f64;
    if p_signal == 0.0 {
        return Err(Error::invalid("signal has zero power"));
    }
    if p_noise == 0.0 {
        return Err(Error::invalid("noise has zero power over the mixed span"));
    }

    // 10*log10(p_signal / (scale^2 * p_noise)) == snr_db
    let scale = (p_signal / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt() as f32;
    let mut clipped = 0usize;
    let samples: Vec<f32> = w
        .samples
        .iter()
        .zip(&looped)
        .map(|(&s, &n)| {
            let v = s + scale * n;
            if !(-1.0..=1.0).contains(&v) {
                clipped += 1;
            }
            v.clamp(-1.0, 1.0)
        })
        .collect();
    Ok(NoiseMix {
        waveform: Waveform::new(samples, w.sample_rate)?,
        clipped_samples: clipped,
    })
}
