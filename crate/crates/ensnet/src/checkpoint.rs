//! Parameter checkpoint container.
//!
//! Layout (all integers unsigned 32-bit little-endian, floats 64-bit
//! little-endian):
//!
//! ```text
//! magic "ENSW" | version | record count
//! per record:  label length, label bytes, dim count, dims..., floats...
//! optional trailer (fusion models): weight count, weights...
//! ```

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ENSW";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub label: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointError {
    Io(String),
    BadMagic,
    BadVersion(u32),
    Truncated,
    Corrupt(String),
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::Io(m) => write!(f, "checkpoint io error: {m}"),
            CheckpointError::BadMagic => write!(f, "not a checkpoint file (bad magic)"),
            CheckpointError::BadVersion(v) => write!(f, "unsupported checkpoint version {v}"),
            CheckpointError::Truncated => write!(f, "checkpoint file is truncated"),
            CheckpointError::Corrupt(m) => write!(f, "corrupt checkpoint: {m}"),
        }
    }
}

impl std::error::Error for CheckpointError {}

pub fn encode_checkpoint(records: &[CheckpointRecord], fusion_weights: Option<&[f64]>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for r in records {
        out.extend_from_slice(&(r.label.len() as u32).to_le_bytes());
        out.extend_from_slice(r.label.as_bytes());
        out.extend_from_slice(&(r.dims.len() as u32).to_le_bytes());
        for &d in &r.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &r.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(w) = fusion_weights {
        out.extend_from_slice(&(w.len() as u32).to_le_bytes());
        for &v in w {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn decode_checkpoint(
    bytes: &[u8],
) -> Result<(Vec<CheckpointRecord>, Option<Vec<f64>>), CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let count = r.u32()? as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let label_len = r.u32()? as usize;
        let label = String::from_utf8(r.take(label_len)?.to_vec())
            .map_err(|_| CheckpointError::Corrupt("label is not utf-8".into()))?;
        let dim_count = r.u32()? as usize;
        let mut dims = Vec::with_capacity(dim_count);
        for _ in 0..dim_count {
            dims.push(r.u32()? as usize);
        }
        let n: usize = dims.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(r.f64()?);
        }
        records.push(CheckpointRecord { label, dims, data });
    }
    let fusion_weights = if r.done() {
        None
    } else {
        let n = r.u32()? as usize;
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            w.push(r.f64()?);
        }
        if !r.done() {
            return Err(CheckpointError::Corrupt(
                "trailing bytes after weight record".into(),
            ));
        }
        Some(w)
    };
    Ok((records, fusion_weights))
}

pub fn write_checkpoint(
    path: impl AsRef<Path>,
    records: &[CheckpointRecord],
    fusion_weights: Option<&[f64]>,
) -> Result<(), CheckpointError> {
    let bytes = encode_checkpoint(records, fusion_weights);
    let mut f = fs::File::create(path).map_err(|e| CheckpointError::Io(e.to_string()))?;
    f.write_all(&bytes)
        .map_err(|e| CheckpointError::Io(e.to_string()))
}

pub fn read_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(Vec<CheckpointRecord>, Option<Vec<f64>>), CheckpointError> {
    let bytes = fs::read(path).map_err(|e| CheckpointError::Io(e.to_string()))?;
    decode_checkpoint(&bytes)
}
