//! FPW1: network checkpoint container.
//!
//! Layout:
//!
//! ```text
//! magic   4 bytes  "FPW1"
//! hlen    u32 LE   header byte length
//! header  JSON     architecture id, hyperparameters, seed, step,
//!                  ordered tensor directory (name + dims)
//! body    one FPT1 record per directory entry, in order
//! ```
//!
//! The directory is authoritative: body tensors must match its order and
//! shapes exactly. Optimizer moments ride along as ordinary named tensors
//! so training can resume bit-for-bit.

use crate::error::{Error, Result};
use crate::io::fpt::{self, TensorData};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"FPW1";

const MAX_HEADER: u32 = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    /// Architecture identifier, e.g. "res-stack/1".
    pub arch: String,
    /// Architecture and training hyperparameters; the network module owns
    /// the schema, this container just carries it.
    pub hyper: serde_json::Value,
    pub seed: u64,
    /// Optimizer steps taken so far.
    pub step: u64,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    /// Aligned with `header.tensors`.
    pub tensors: Vec<TensorData>,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Option<&TensorData> {
        self.header
            .tensors
            .iter()
            .position(|e| e.name == name)
            .map(|i| &self.tensors[i])
    }

    fn validate(&self) -> Result<()> {
        if self.header.tensors.len() != self.tensors.len() {
            return Err(Error::validation(format!(
                "checkpoint directory lists {} tensors but {} provided",
                self.header.tensors.len(),
                self.tensors.len()
            )));
        }
        for (entry, tensor) in self.header.tensors.iter().zip(&self.tensors) {
            if entry.dims != tensor.dims {
                return Err(Error::validation(format!(
                    "checkpoint tensor {:?} dims {:?} do not match directory {:?}",
                    entry.name, tensor.dims, entry.dims
                )));
            }
        }
        Ok(())
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    ckpt.validate()?;
    let header = serde_json::to_vec(&ckpt.header)
        .map_err(|e| Error::format(path, format!("checkpoint header encode failed: {e}")))?;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&(header.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&header).map_err(io_err)?;
    for tensor in &ckpt.tensors {
        fpt::encode(tensor, &mut w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic {magic:?}, expected \"FPW1\""),
        ));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let hlen = u32::from_le_bytes(u32buf);
    if hlen > MAX_HEADER {
        return Err(Error::format(path, "implausible header length"));
    }
    let mut hbuf = vec![0u8; hlen as usize];
    r.read_exact(&mut hbuf).map_err(io_err)?;
    let header: CheckpointHeader = serde_json::from_slice(&hbuf)
        .map_err(|e| Error::format(path, format!("checkpoint header parse failed: {e}")))?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for _ in &header.tensors {
        tensors.push(fpt::decode(&mut r, path)?);
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::format(path, "trailing bytes after last tensor")),
        Err(e) => return Err(Error::io(path, e)),
    }

    let ckpt = Checkpoint { header, tensors };
    ckpt.validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(ckpt)
}
