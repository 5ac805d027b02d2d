//! Binary emissions format: magic `CTCE`, u32 version, u32 frames, u32
//! classes, u32 blank index, length-prefixed UTF-8 vocab entries, then
//! frames x classes little-endian f32 natural-log probabilities, row-major.

use std::path::Path;

use crate::error::{Error, Result};

use super::EmissionMatrix;

const MAGIC: &[u8; 4] = b"CTCE";
const VERSION: u32 = 1;

pub fn write_emissions(em: &EmissionMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(24 + em.frames() * em.classes() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(em.frames() as u32).to_le_bytes());
    bytes.extend_from_slice(&(em.classes() as u32).to_le_bytes());
    bytes.extend_from_slice(&(em.blank_index() as u32).to_le_bytes());
    for token in em.vocab() {
        bytes.extend_from_slice(&(token.len() as u32).to_le_bytes());
        bytes.extend_from_slice(token.as_bytes());
    }
    for &v in em.log_probs() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_emissions(path: impl AsRef<Path>) -> Result<EmissionMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: String| Error::format(path, msg);

    let take_u32 = |pos: &mut usize| -> Result<u32> {
        if *pos + 4 > bytes.len() {
            return Err(Error::format(path, format!("truncated payload at byte {pos}", pos = *pos)));
        }
        let v = u32::from_le_bytes(bytes[*pos..*pos + 4].try_into().unwrap());
        *pos += 4;
        Ok(v)
    };

    if bytes.len() < 4 || &bytes[0..4] != MAGIC {
        return Err(fail("bad magic, expected CTCE".into()));
    }
    let mut pos = 4usize;
    let version = take_u32(&mut pos)?;
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    let frames = take_u32(&mut pos)? as usize;
    let classes = take_u32(&mut pos)? as usize;
    let blank = take_u32(&mut pos)? as usize;
    if frames == 0 {
        return Err(fail("T >= 1 required".into()));
    }
    if classes == 0 {
        return Err(fail("vocabulary must be non-empty".into()));
    }
    let mut vocab = Vec::with_capacity(classes);
    for _ in 0..classes {
        let len = take_u32(&mut pos)? as usize;
        if pos + len > bytes.len() {
            return Err(fail(format!("truncated vocab entry at byte {pos}")));
        }
        let token = std::str::from_utf8(&bytes[pos..pos + len])
            .map_err(|_| Error::format(path, "vocab entry is not UTF-8"))?;
        vocab.push(token.to_string());
        pos += len;
    }
    let expected = frames * classes * 4;
    if bytes.len() - pos != expected {
        return Err(fail(format!(
            "expected {expected} bytes of log-probabilities, found {}",
            bytes.len() - pos
        )));
    }
    let mut log_probs = Vec::with_capacity(frames * classes);
    for chunk in bytes[pos..].chunks_exact(4) {
        log_probs.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    EmissionMatrix::new(log_probs, frames, classes, blank, vocab).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::format(path, msg),
        other => other,
    })
}
