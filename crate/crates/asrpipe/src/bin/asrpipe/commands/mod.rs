pub mod audio;
pub mod decode;
pub mod eval;
pub mod filter;
pub mod lm;
pub mod manifest_cmd;
pub mod mix;
pub mod norm;

use std::path::Path;

use asrpipe::error::{Error, Result};

/// Reads a text file into lines (no trailing empty line).
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Rounds for report serialization: six decimal digits.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Parses `a=1,b=2` pairs.
pub fn parse_kv_list(s: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected key=value, got \"{item}\"")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numeric value in \"{item}\"")))?;
        out.push((k.trim().to_string(), v));
    }
    if out.is_empty() {
        return Err(Error::invalid("empty key=value list"));
    }
    Ok(out)
}

/// Parses a comma-separated float list.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number \"{v}\"")))
        })
        .collect()
}

/// Emissions file belonging to a manifest entry: `<dir>/<stem>.ctce`.
pub fn emissions_path(dir: &Path, audio_path: &str) -> Result<std::path::PathBuf> {
    let stem = Path::new(audio_path)
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid(format!("cannot derive a file stem from \"{audio_path}\"")))?;
    Ok(dir.join(format!("{stem}.ctce")))
}
