//! Audio post-processing and augmentation: silence detection, VAD-gap and
//! embedding-similarity segment merging, long-segment splitting, WSOLA time
//! stretching, and SNR-controlled noise mixing.
//!
//! Canonical audio is 16-bit PCM mono WAV at 16 kHz. Other sample rates are
//! read as-is; operations that would require resampling report an error
//! instead.

mod noise;
mod segments;
mod wsola;

pub use noise::mix_noise;
pub use segments::{
    detect_silence, merge_by_embedding, merge_vad_segments, split_long_segment, FrameParams,
};
pub use wsola::wsola_stretch;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// PCM audio in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Waveform> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("waveform contains non-finite samples"));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean square of the samples.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|&s| s as f64 * s as f64).sum::<f64>() / self.samples.len() as f64
    }
}

/// A time interval within a waveform, optionally carrying a precomputed
/// speaker embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(skip)]
    pub embedding: Option<Vec<f32>>,
}

impl Segment {
    pub fn new(start_s: f64, end_s: f64) -> Result<Segment> {
        if !(start_s >= 0.0 && start_s < end_s) {
            return Err(Error::invalid(format!(
                "segment must satisfy 0 <= start < end, got [{start_s}, {end_s}]"
            )));
        }
        Ok(Segment {
            start_s,
            end_s,
            embedding: None,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Reads a RIFF/WAV file. Only 16-bit PCM mono is supported.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;

    let fail = |msg: &str| Error::format(path, msg.to_string());
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(fail("not a RIFF/WAVE file"));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None; // (codec, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(fail("truncated chunk"));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(fail("fmt chunk too short"));
                }
                let b = &bytes[body_start..];
                format = Some((
                    u16::from_le_bytes(b[0..2].try_into().unwrap()),
                    u16::from_le_bytes(b[2..4].try_into().unwrap()),
                    u32::from_le_bytes(b[4..8].try_into().unwrap()),
                    u16::from_le_bytes(b[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        pos = body_end + body_end % 2; // chunks are word-aligned
    }
    let (codec, channels, rate, bits) = format.ok_or_else(|| fail("missing fmt chunk"))?;
    if codec != 1 || bits != 16 {
        return Err(fail("only 16-bit PCM is supported"));
    }
    if channels != 1 {
        return Err(fail("only mono audio is supported"));
    }
    let data = data.ok_or_else(|| fail("missing data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(fail("odd data chunk length"));
    }
    let samples: Vec<f32> = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
        .collect();
    Waveform::new(samples, rate)
}

/// Writes 16-bit PCM mono WAV; samples are clamped to [-1, 1].
pub fn write_wav(w: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let data_len = (w.samples.len() * 2) as u32;
    let result: std::io::Result<()> = (|| {
        out.write_all(b"RIFF")?;
        out.write_all(&(36 + data_len).to_le_bytes())?;
        out.write_all(b"WAVE")?;
        out.write_all(b"fmt ")?;
        out.write_all(&16u32.to_le_bytes())?;
        out.write_all(&1u16.to_le_bytes())?; // PCM
        out.write_all(&1u16.to_le_bytes())?; // mono
        out.write_all(&w.sample_rate.to_le_bytes())?;
        out.write_all(&(w.sample_rate * 2).to_le_bytes())?; // byte rate
        out.write_all(&2u16.to_le_bytes())?; // block align
        out.write_all(&16u16.to_le_bytes())?; // bits
        out.write_all(b"data")?;
        out.write_all(&data_len.to_le_bytes())?;
        for &s in &w.samples {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    })();
    result.map_err(|e| Error::io(path, e))
}

/// Reads a segment list: JSONL records `{"start_s":..,"end_s":..}`.
pub fn read_segments(path: impl AsRef<Path>) -> Result<Vec<Segment>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seg: Segment = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, idx + 1, format!("malformed segment: {e}")))?;
        Segment::new(seg.start_s, seg.end_s)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        out.push(seg);
    }
    Ok(out)
}

pub fn write_segments(segments: &[Segment], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for seg in segments {
        out.push_str(&serde_json::to_string(seg).expect("segment serialization is infallible"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

const EMBEDDINGS_MAGIC: &[u8; 4] = b"EMB1";

/// Reads packed embeddings: magic `EMB1`, u32 dimension, u32 count, then
/// `count * dimension` little-endian float32 values.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != EMBEDDINGS_MAGIC {
        return Err(Error::format(path, "missing EMB1 header"));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + dim * count * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for {count} x {dim} floats, found {}", bytes.len()),
        ));
    }
    if dim == 0 {
        return Err(Error::format(path, "embedding dimension must be positive"));
    }
    let mut vectors = Vec::with_capacity(count);
    let mut offset = 12;
    for _ in 0..count {
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            v.push(f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()));
            offset += 4;
        }
        vectors.push(v);
    }
    Ok(vectors)
}

pub fn write_embeddings(vectors: &[Vec<f32>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dim = vectors.first().map(Vec::len).unwrap_or(0);
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("embedding dimension mismatch"));
    }
    let mut bytes = Vec::with_capacity(12 + vectors.len() * dim * 4);
    bytes.extend_from_slice(EMBEDDINGS_MAGIC);
    bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    bytes.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    for v in vectors {
        for &x in v {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
