//! On-disk formats.
//!
//! Segment file (`.seg`), little-endian:
//!
//! ```text
//! "PCGS" | version u16 = 1 | reserved u16 | sample_rate u32 | n u32 | n x f32
//! ```
//!
//! Feature tensor file (`.feat`), little-endian:
//!
//! ```text
//! "PCGF" | version u16 = 1 | kind u8 | reserved u8 | rows u32 | cols u32
//!        | params_hash u64 | rows * cols x f32 (row-major)
//! ```

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::features::{FeatureKind, FeatureMap};

const SEGMENT_MAGIC: &[u8; 4] = b"PCGS";
const FEATURE_MAGIC: &[u8; 4] = b"PCGF";
const VERSION: u16 = 1;

fn format_err(path: &Path, reason: impl Into<String>) -> CoreError {
    CoreError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Write `bytes` to a sibling temp file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| CoreError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CoreError::io(path, e))
}

pub fn encode_segment(samples: &[f64], sample_rate_hz: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + samples.len() * 4);
    out.extend_from_slice(SEGMENT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    for &s in samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

pub fn decode_segment(bytes: &[u8], path: &Path) -> Result<(Vec<f64>, u32)> {
    if bytes.len() < 16 || &bytes[..4] != SEGMENT_MAGIC {
        return Err(format_err(path, "not a segment file"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let rate = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let n = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != n * 4 {
        return Err(format_err(path, format!("expected {n} samples, found {} bytes", body.len())));
    }
    let samples = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((samples, rate))
}

pub fn write_segment(path: &Path, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
    write_atomic(path, &encode_segment(samples, sample_rate_hz))
}

pub fn read_segment(path: &Path) -> Result<(Vec<f64>, u32)> {
    let bytes = std::fs::read(path).map_err(|e| CoreError::io(path, e))?;
    decode_segment(&bytes, path)
}

pub fn encode_feature_map(map: &FeatureMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + map.data.len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(map.kind.code());
    out.push(0);
    out.extend_from_slice(&(map.rows as u32).to_le_bytes());
    out.extend_from_slice(&(map.cols as u32).to_le_bytes());
    out.extend_from_slice(&map.params_hash.to_le_bytes());
    for &v in &map.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_feature_map(bytes: &[u8], path: &Path) -> Result<FeatureMap> {
    if bytes.len() < 24 || &bytes[..4] != FEATURE_MAGIC {
        return Err(format_err(path, "not a feature file"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let kind = FeatureKind::from_code(bytes[6]).ok_or_else(|| format_err(path, "unknown feature kind"))?;
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let params_hash = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let body = &bytes[24..];
    if body.len() != rows * cols * 4 {
        return Err(format_err(path, "payload size does not match header"));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(FeatureMap {
        kind,
        rows,
        cols,
        data,
        params_hash,
    })
}

pub fn write_feature_map(path: &Path, map: &FeatureMap) -> Result<()> {
    write_atomic(path, &encode_feature_map(map))
}

pub fn read_feature_map(path: &Path) -> Result<FeatureMap> {
    let bytes = std::fs::read(path).map_err(|e| CoreError::io(path, e))?;
    decode_feature_map(&bytes, path)
}

/// Read one JSON value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| CoreError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| format_err(path, format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

/// Replace `path` with the JSON-lines encoding of `items`.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, &to_jsonl(items))
}

/// Append one JSON line to `path`, creating it if needed.
pub fn append_jsonl<T: Serialize>(path: &Path, item: &T) -> Result<()> {
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CoreError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, item).expect("serializable");
    w.write_all(b"\n").map_err(|e| CoreError::io(path, e))?;
    w.flush().map_err(|e| CoreError::io(path, e))
}
