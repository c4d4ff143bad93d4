//! Checkpoint wire format.
//!
//! Layout, all integers little-endian:
//! - magic `PPCK`, format version u32
//! - fnv1a-64 digest of the config JSON, u32 config length, config JSON bytes
//! - named parameter blobs until EOF: u32 name length, name bytes, u32 rank,
//!   rank u32 dims, then `prod(dims)` f64 values.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn save_checkpoint(
    path: &Path,
    config_json: &str,
    tensors: &[(String, &Tensor)],
) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&fnv1a64(config_json.as_bytes()).to_le_bytes());
    buf.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(config_json.as_bytes());
    for (name, tensor) in tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(tensor.shape.len() as u32).to_le_bytes());
        for &d in &tensor.shape {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &tensor.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub struct CheckpointContents {
    pub config_json: String,
    pub tensors: Vec<(String, Tensor)>,
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointContents> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    let magic = cur.take(4)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let digest = cur.u64()?;
    let cfg_len = cur.u32()? as usize;
    let config_json = String::from_utf8(cur.take(cfg_len)?.to_vec())
        .map_err(|e| Error::Checkpoint(format!("config not utf-8: {e}")))?;
    if fnv1a64(config_json.as_bytes()) != digest {
        return Err(Error::Checkpoint("config digest mismatch".into()));
    }
    let mut tensors = Vec::new();
    while !cur.done() {
        let name_len = cur.u32()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|e| Error::Checkpoint(format!("name not utf-8: {e}")))?;
        let rank = cur.u32()? as usize;
        if rank > 4 {
            return Err(Error::Checkpoint(format!("rank {rank} exceeds 4")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = cur.take(8 * n)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push((name, Tensor { shape, data, grad: None }));
    }
    Ok(CheckpointContents { config_json, tensors })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
