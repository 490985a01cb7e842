//! Binary parameter checkpoints.
//!
//! Layout: the 8 magic bytes `BGNCKPT1`, a little-endian `u32` header
//! length, a JSON [`CheckpointHeader`], then every parameter's entries as
//! little-endian `f64` in row-major order at the recorded offsets (counted in
//! `f64` values from the start of the data block).

use super::ParamSet;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BGNCKPT1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: [usize; 2],
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub variant: String,
    pub domain: String,
    /// Free-form metadata such as the update count.
    #[serde(default)]
    pub meta: serde_json::Value,
    pub params: Vec<ParamEntry>,
}

pub fn save_checkpoint(
    path: &Path,
    variant: &str,
    domain: &str,
    meta: serde_json::Value,
    params: &ParamSet,
) -> Result<(), CheckpointError> {
    let mut entries = Vec::with_capacity(params.len());
    let mut offset = 0;
    for id in params.ids() {
        let (r, c) = params.get(id).dim();
        entries.push(ParamEntry {
            name: params.name(id).to_string(),
            shape: [r, c],
            offset,
        });
        offset += r * c;
    }
    let header = CheckpointHeader {
        version: FORMAT_VERSION,
        variant: variant.to_string(),
        domain: domain.to_string(),
        meta,
        params: entries,
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(12 + json.len() + offset * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for id in params.ids() {
        for v in params.get(id).iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, ParamSet), CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header_end = 12 + hlen;
    if bytes.len() < header_end {
        return Err(CheckpointError::Corrupt("truncated header".into()));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[12..header_end])?;
    if header.version != FORMAT_VERSION {
        return Err(CheckpointError::Version(header.version));
    }
    let data = &bytes[header_end..];
    let mut params = ParamSet::new();
    for e in &header.params {
        let n = e.shape[0] * e.shape[1];
        let start = e.offset * 8;
        let end = start + n * 8;
        if end > data.len() {
            return Err(CheckpointError::Corrupt(format!("{} past end of data", e.name)));
        }
        let values: Vec<f64> = data[start..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let m = Array2::from_shape_vec((e.shape[0], e.shape[1]), values)
            .map_err(|err| CheckpointError::Corrupt(err.to_string()))?;
        params.add(e.name.clone(), m);
    }
    Ok((header, params))
}
