//! Binary parameter checkpoints.
//!
//! Layout: one ASCII header line
//! `dualgraph-checkpoint v1 fingerprint=<hex> blocks=<count>\n`, then per block
//! a little-endian `u32` name length, the UTF-8 name, `u64` rows, `u64` cols
//! and `rows·cols` little-endian `f64` values.

use std::fs;
use std::path::Path;

use super::params::ModelParams;
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::Tensor2;

pub const CHECKPOINT_MAGIC: &str = "dualgraph-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub fingerprint: String,
    pub blocks: Vec<(String, Tensor2)>,
}

impl Checkpoint {
    /// Restores parameters, refusing checkpoints written for another config.
    pub fn into_params(self, config: &ModelConfig) -> Result<ModelParams> {
        let expected = config.fingerprint();
        if self.fingerprint != expected {
            return Err(Error::validation(format!(
                "checkpoint fingerprint {} does not match config fingerprint {expected}",
                self.fingerprint
            )));
        }
        ModelParams::from_named(config, &self.blocks)
    }
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, config: &ModelConfig) -> Result<()> {
    let named = params.named();
    let mut out = format!(
        "{CHECKPOINT_MAGIC} v{VERSION} fingerprint={} blocks={}\n",
        config.fingerprint(),
        named.len()
    )
    .into_bytes();
    for (name, (rows, cols), values) in named {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(cols as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::validation(format!(
                "{}: truncated checkpoint at byte {}",
                self.path.display(),
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::validation(format!("{}: {msg}", path.display()));

    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| bad("header is not UTF-8"))?;
    let mut fields = header.split(' ');
    if fields.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad("not a checkpoint file"));
    }
    if fields.next() != Some(&format!("v{VERSION}")[..]) {
        return Err(bad("unsupported checkpoint version"));
    }
    let fingerprint = fields
        .next()
        .and_then(|f| f.strip_prefix("fingerprint="))
        .ok_or_else(|| bad("missing fingerprint"))?
        .to_string();
    let count: usize = fields
        .next()
        .and_then(|f| f.strip_prefix("blocks="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad("missing block count"))?;

    let mut reader = Reader {
        bytes: &bytes,
        pos: newline + 1,
        path,
    };
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = reader.u32()? as usize;
        let name = std::str::from_utf8(reader.take(name_len)?)
            .map_err(|_| bad("block name is not UTF-8"))?
            .to_string();
        let rows = reader.u64()? as usize;
        let cols = reader.u64()? as usize;
        let raw = reader.take(rows * cols * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        blocks.push((name, Tensor2::from_vec(rows, cols, values)?));
    }
    if reader.pos != bytes.len() {
        return Err(bad("trailing bytes after last block"));
    }
    Ok(Checkpoint {
        fingerprint,
        blocks,
    })
}
