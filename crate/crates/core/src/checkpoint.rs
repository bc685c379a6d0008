//! Binary parameter checkpoints tied to the configuration that produced them.
//!
//! ```text
//! "TSA1"  digest:[u8; 32]  count:u32
//! count x ( name_len:u32  name  rank:u32  dims:u32 x rank  values:f64 x prod(dims) )
//! ```
//!
//! Integers and floats are little-endian. The digest is the SHA-256 of the
//! configuration rendered as TOML, so a checkpoint only loads under a
//! configuration that serializes identically.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::autodiff::{ParamSet, ParamTensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TSA1";

pub type ConfigDigest = [u8; 32];

pub fn config_digest<T: Serialize>(config: &T) -> Result<ConfigDigest> {
    let text = toml::to_string(config)
        .map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))?;
    Ok(Sha256::digest(text.as_bytes()).into())
}

pub fn encode_checkpoint(digest: &ConfigDigest, params: &ParamSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + 8 * params.scalar_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(digest);
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.shape().len() as u32).to_le_bytes());
        for &d in p.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &p.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parses a checkpoint, returning its stored digest and tensors.
pub fn decode_checkpoint(bytes: &[u8], origin: &Path) -> Result<(ConfigDigest, ParamSet)> {
    let mut pos = 0usize;
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        if bytes.len() - pos < n {
            return Err(Error::format(
                origin,
                format!("checkpoint truncated while reading {what} at byte {pos}"),
            ));
        }
        pos += n;
        Ok(&bytes[pos - n..pos])
    };
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;

    if take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format(
            origin,
            "not a checkpoint (bad magic, expected \"TSA1\")",
        ));
    }
    let digest: ConfigDigest = take(32, "digest")?.try_into().unwrap();
    let count = u32_at(take(4, "tensor count")?);
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = u32_at(take(4, "name length")?);
        let name = std::str::from_utf8(take(name_len, "tensor name")?)
            .map_err(|_| Error::format(origin, "tensor name is not UTF-8"))?
            .to_string();
        let rank = u32_at(take(4, "rank")?);
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32_at(take(4, "dimension")?));
        }
        let n: usize = shape.iter().product();
        let values = take(8 * n, "tensor values")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.add(ParamTensor::new(name, shape, values)?);
    }
    if pos != bytes.len() {
        return Err(Error::format(
            origin,
            format!("{} trailing bytes after the last tensor", bytes.len() - pos),
        ));
    }
    Ok((digest, params))
}

pub fn save_checkpoint(path: &Path, digest: &ConfigDigest, params: &ParamSet) -> Result<()> {
    std::fs::write(path, encode_checkpoint(digest, params))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads a checkpoint and rejects it unless it was written under `expected`.
pub fn load_checkpoint(path: &Path, expected: &ConfigDigest) -> Result<ParamSet> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let (digest, params) = decode_checkpoint(&bytes, path)?;
    if &digest != expected {
        return Err(Error::DigestMismatch);
    }
    Ok(params)
}
