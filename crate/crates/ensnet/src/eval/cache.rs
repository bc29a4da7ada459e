//! Binary feature cache: per-item score vectors with labels.
//!
//! Layout (integers u32 LE, floats f64 LE):
//!
//! ```text
//! magic "ENSF" | version | id length | id bytes | item count | classes
//! per item: label | classes floats
//! ```

use super::metrics::PredictionRecord;
use super::EvalError;
use std::fs;
use std::path::Path;

pub const CACHE_MAGIC: &[u8; 4] = b"ENSF";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub network_id: String,
    pub classes: usize,
    pub labels: Vec<u32>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureCache {
    pub fn new(
        network_id: String,
        classes: usize,
        labels: Vec<u32>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, EvalError> {
        if labels.len() != rows.len() {
            return Err(EvalError::Cache(format!(
                "{} labels for {} rows",
                labels.len(),
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != classes) {
            return Err(EvalError::Cache(format!(
                "row {bad} has {} values, expected {classes}",
                rows[bad].len()
            )));
        }
        Ok(FeatureCache {
            network_id,
            classes,
            labels,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_records(&self) -> Vec<PredictionRecord> {
        self.rows
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (scores, &label))| PredictionRecord {
                item: format!("{}#{}", self.network_id, i),
                label,
                scores: scores.clone(),
            })
            .collect()
    }
}

pub fn encode_cache(cache: &FeatureCache) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(cache.network_id.len() as u32).to_le_bytes());
    out.extend_from_slice(cache.network_id.as_bytes());
    out.extend_from_slice(&(cache.len() as u32).to_le_bytes());
    out.extend_from_slice(&(cache.classes as u32).to_le_bytes());
    for (row, &label) in cache.rows.iter().zip(&cache.labels) {
        out.extend_from_slice(&label.to_le_bytes());
        for &v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_cache(bytes: &[u8]) -> Result<FeatureCache, EvalError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], EvalError> {
        if *pos + n > bytes.len() {
            return Err(EvalError::Cache("cache file is truncated".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let u32_at = |pos: &mut usize| -> Result<u32, EvalError> {
        let b = take(pos, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    };
    if take(&mut pos, 4)? != CACHE_MAGIC {
        return Err(EvalError::Cache("not a feature cache (bad magic)".into()));
    }
    let version = u32_at(&mut pos)?;
    if version != CACHE_VERSION {
        return Err(EvalError::Cache(format!(
            "unsupported cache version {version}"
        )));
    }
    let id_len = u32_at(&mut pos)? as usize;
    let network_id = String::from_utf8(take(&mut pos, id_len)?.to_vec())
        .map_err(|_| EvalError::Cache("network id is not utf-8".into()))?;
    let count = u32_at(&mut pos)? as usize;
    let classes = u32_at(&mut pos)? as usize;
    if classes == 0 {
        return Err(EvalError::Cache("cache declares zero classes".into()));
    }
    let mut labels = Vec::with_capacity(count);
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        labels.push(u32_at(&mut pos)?);
        let mut row = Vec::with_capacity(classes);
        for _ in 0..classes {
            let b = take(&mut pos, 8)?;
            let mut a = [0u8; 8];
            a.copy_from_slice(b);
            row.push(f64::from_le_bytes(a));
        }
        rows.push(row);
    }
    if pos != bytes.len() {
        return Err(EvalError::Cache(
            "trailing bytes after cache payload".into(),
        ));
    }
    FeatureCache::new(network_id, classes, labels, rows)
}

pub fn write_cache(path: impl AsRef<Path>, cache: &FeatureCache) -> Result<(), EvalError> {
    fs::write(path, encode_cache(cache)).map_err(|e| EvalError::Io(e.to_string()))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<FeatureCache, EvalError> {
    let bytes =
        fs::read(&path).map_err(|e| EvalError::Io(format!("{}: {e}", path.as_ref().display())))?;
    decode_cache(&bytes)
}
