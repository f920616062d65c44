//! Packed binary cache for event files.
//!
//! Layout (little-endian): magic `HWKCACHE`, format version `u32`, SHA-256
//! of the source CSV (32 bytes), `M: u64`, `N: u64`, `T: f64`, `N` times as
//! `f64`, then `N` marks as LEB128 varints. A cache whose hash differs from
//! the current source file is rebuilt.

use std::fs;
use std::path::{Path, PathBuf};

use hawkes_core::EventSequence;
use sha2::{Digest, Sha256};

use crate::files::{parse_events, FileError};

const MAGIC: &[u8; 8] = b"HWKCACHE";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    /// Loaded from a cache matching the source.
    Hit,
    /// No usable cache; parsed the CSV and wrote one.
    Rebuilt,
}

pub fn cache_path(source: &Path) -> PathBuf {
    let mut name = source.as_os_str().to_owned();
    name.push(".hwkc");
    PathBuf::from(name)
}

pub fn encode(seq: &EventSequence, source_hash: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 9 * seq.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(source_hash);
    out.extend_from_slice(&(seq.num_nodes() as u64).to_le_bytes());
    out.extend_from_slice(&(seq.len() as u64).to_le_bytes());
    out.extend_from_slice(&seq.horizon().to_le_bytes());
    for t in seq.times() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for &m in seq.marks() {
        let mut v = m as u64;
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                out.push(byte);
                break;
            }
            out.push(byte | 0x80);
        }
    }
    out
}

/// Returns `None` when the bytes are not a valid cache for `source_hash`.
pub fn decode(bytes: &[u8], source_hash: &[u8]) -> Option<EventSequence> {
    let mut rest = bytes;
    let mut take = |n: usize| -> Option<&[u8]> {
        if rest.len() < n {
            return None;
        }
        let (head, tail) = rest.split_at(n);
        rest = tail;
        Some(head)
    };
    if take(8)? != MAGIC || take(4)? != VERSION.to_le_bytes() || take(32)? != source_hash {
        return None;
    }
    let m = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
    let n = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
    let horizon = f64::from_le_bytes(take(8)?.try_into().ok()?);
    let raw = take(n.checked_mul(8)?)?;
    let times = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut marks = Vec::with_capacity(n);
    let mut v = 0u64;
    let mut shift = 0;
    for &byte in rest {
        if shift > 63 {
            return None;
        }
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            marks.push(v as usize);
            v = 0;
            shift = 0;
        } else {
            shift += 7;
        }
    }
    if marks.len() != n || shift != 0 {
        return None;
    }
    EventSequence::new(times, marks, horizon, m).ok()
}

/// Reads an event CSV through its binary cache, refreshing the cache when
/// missing or stale. A cache that cannot be written is not an error.
pub fn read_events_cached(path: &Path) -> Result<(EventSequence, CacheStatus), FileError> {
    let bytes = fs::read(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let hash = Sha256::digest(&bytes);
    let cache = cache_path(path);
    if let Ok(cached) = fs::read(&cache) {
        if let Some(seq) = decode(&cached, hash.as_slice()) {
            return Ok((seq, CacheStatus::Hit));
        }
    }
    let text = String::from_utf8(bytes).map_err(|_| FileError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "file is not UTF-8".into(),
    })?;
    let seq = parse_events(&text, path)?;
    let _ = fs::write(&cache, encode(&seq, hash.as_slice()));
    Ok((seq, CacheStatus::Rebuilt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hawkes_core::model::validate_sequence;

    #[test]
    fn encode_decode_round_trip() {
        let seq = validate_sequence(vec![0.0, 0.5, 0.5, 7.25], vec![0, 300, 1, 299], 8.0, 301).unwrap();
        let hash = [7u8; 32];
        let bytes = encode(&seq, &hash);
        assert_eq!(decode(&bytes, &hash), Some(seq));
        assert_eq!(decode(&bytes, &[8u8; 32]), None);
        assert_eq!(decode(&bytes[..bytes.len() - 1], &hash), None);
    }
}
