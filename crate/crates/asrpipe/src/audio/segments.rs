//! Silence detection and segment merging/splitting rules.

use crate::error::{Error, Result};

use super::{Segment, Waveform};

/// Framing used for RMS energy scans.
#[derive(Debug, Clone, Copy)]
pub struct FrameParams {
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for FrameParams {
    fn default() -> Self {
        FrameParams {
            frame_ms: 25.0,
            hop_ms: 10.0,
        }
    }
}

impl FrameParams {
    fn frame_len(&self, sample_rate: u32) -> usize {
        ((self.frame_ms / 1000.0) * sample_rate as f64).round().max(1.0) as usize
    }

    fn hop_len(&self, sample_rate: u32) -> usize {
        ((self.hop_ms / 1000.0) * sample_rate as f64).round().max(1.0) as usize
    }
}

/// RMS level of a frame in dBFS (full scale = 1.0). Silence is -inf.
fn rms_db(frame: &[f32]) -> f64 {
    let power = frame.iter().map(|&s| s as f64 * s as f64).sum::<f64>() / frame.len() as f64;
    if power == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * power.log10()
    }
}

/// Frame-wise silence scan: frames whose RMS falls below `threshold_db`
/// merged into runs of at least `min_silence_s`.
pub fn detect_silence(
    w: &Waveform,
    threshold_db: f64,
    frames: FrameParams,
    min_silence_s: f64,
) -> Vec<Segment> {
    let sr = w.sample_rate as f64;
    let frame_len = frames.frame_len(w.sample_rate);
    let hop = frames.hop_len(w.sample_rate);
    if w.samples.is_empty() {
        return Vec::new();
    }

    let mut runs: Vec<(f64, f64)> = Vec::new(); // (start_s, end_s) of silent spans
    let mut current: Option<(f64, f64)> = None;
    let mut start = 0usize;
    while start < w.samples.len() {
        let end = (start + frame_len).min(w.samples.len());
        let silent = rms_db(&w.samples[start..end]) < threshold_db;
        let t0 = start as f64 / sr;
        let t1 = end as f64 / sr;
        match (&mut current, silent) {
            (Some((_, run_end)), true) => *run_end = t1,
            (None, true) => current = Some((t0, t1)),
            (Some(run), false) => {
                runs.push(*run);
                current = None;
            }
            (None, false) => {}
        }
        start += hop;
    }
    if let Some(run) = current {
        runs.push(run);
    }

    runs.into_iter()
        .filter(|(s, e)| e - s >= min_silence_s)
        .map(|(s, e)| Segment {
            start_s: s,
            end_s: e,
            embedding: None,
        })
        .collect()
}

/// Merges adjacent speech segments separated by less than `max_gap_s`,
/// keeping the gap audio inside the merged segment. Input must be sorted
/// and non-overlapping.
pub fn merge_vad_segments(speech: &[Segment], max_gap_s: f64) -> Result<Vec<Segment>> {
    for pair in speech.windows(2) {
        if pair[1].start_s < pair[0].end_s {
            return Err(Error::invalid(format!(
                "segments must be sorted and non-overlapping: [{}, {}] then [{}, {}]",
                pair[0].start_s, pair[0].end_s, pair[1].start_s, pair[1].end_s
            )));
        }
    }
    let mut out: Vec<Segment> = Vec::new();
    for seg in speech {
        match out.last_mut() {
            Some(prev) if seg.start_s - prev.end_s < max_gap_s => {
                prev.end_s = seg.end_s;
                prev.embedding = None;
            }
            _ => out.push(seg.clone()),
        }
    }
    Ok(out)
}

fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "embedding dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let na: f64 = a.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&y| (y as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("zero-norm embedding"));
    }
    Ok(dot / (na * nb))
}

/// Groups temporally adjacent segments by single linkage: consecutive
/// segments join one group while their cosine similarity is strictly above
/// `threshold`. Every segment must carry an embedding.
pub fn merge_by_embedding(segments: &[Segment], threshold: f64) -> Result<Vec<Vec<Segment>>> {
    let mut groups: Vec<Vec<Segment>> = Vec::new();
    for seg in segments {
        let emb = seg
            .embedding
            .as_ref()
            .ok_or_else(|| Error::invalid("segment is missing an embedding"))?;
        if let Some(group) = groups.last_mut() {
            let prev = group.last().unwrap();
            let sim = cosine(prev.embedding.as_ref().unwrap(), emb)?;
            if sim > threshold {
                group.push(seg.clone());
                continue;
            }
        }
        groups.push(vec![seg.clone()]);
    }
    Ok(groups)
}

/// Splits a segment into pieces of at most `max_len_s`, cutting at the
/// quietest point of the silence run nearest each length boundary
/// (searching backwards), or hard-cutting when no frame in the window falls
/// below `threshold_db`. Pieces tile the input exactly.
pub fn split_long_segment(
    w: &Waveform,
    seg: &Segment,
    max_len_s: f64,
    threshold_db: f64,
    frames: FrameParams,
) -> Vec<Segment> {
    let mut pieces = Vec::new();
    let mut cursor = seg.start_s;
    while seg.end_s - cursor > max_len_s {
        let boundary = cursor + max_len_s;
        let cut = find_cut_before(w, cursor, boundary, threshold_db, frames).unwrap_or(boundary);
        // guarantee progress even if the quietest frame sits at the cursor
        let cut = if cut > cursor { cut } else { boundary };
        pieces.push(Segment {
            start_s: cursor,
            end_s: cut,
            embedding: None,
        });
        cursor = cut;
    }
    pieces.push(Segment {
        start_s: cursor,
        end_s: seg.end_s,
        embedding: None,
    });
    pieces
}

/// Scans frames inside [from, to] backwards from `to`; on the first
/// (nearest) silent run, returns the centre of its quietest frame.
fn find_cut_before(
    w: &Waveform,
    from: f64,
    to: f64,
    threshold_db: f64,
    frames: FrameParams,
) -> Option<f64> {
    let sr = w.sample_rate as f64;
    let frame_len = frames.frame_len(w.sample_rate);
    let hop = frames.hop_len(w.sample_rate);
    let first = (from * sr).ceil() as usize;
    let last_start = ((to * sr) as usize).min(w.samples.len()).checked_sub(frame_len)?;

    let mut idx = last_start;
    let mut in_run = false;
    let mut best: Option<(f64, f64)> = None; // (rms_db, centre_s)
    loop {
        if idx < first {
            break;
        }
        let frame = &w.samples[idx..idx + frame_len];
        let level = rms_db(frame);
        if level < threshold_db {
            in_run = true;
            let centre = (idx + frame_len / 2) as f64 / sr;
            if best.is_none_or(|(b, _)| level < b) {
                best = Some((level, centre));
            }
        } else if in_run {
            break; // walked past the nearest silent run
        }
        if idx < hop {
            break;
        }
        idx -= hop;
    }
    best.map(|(_, centre)| centre)
}
