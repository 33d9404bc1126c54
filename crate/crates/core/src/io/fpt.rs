//! FPT1: a minimal binary tensor container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic  4 bytes  "FPT1"
//! rank   u32
//! dims   rank x u32
//! data   prod(dims) x f32, row-major (last dim fastest)
//! ```

use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"FPT1";

/// Limits a corrupt header can allocate. 1 GiB of f32 is far beyond any
/// tensor this toolkit produces.
const MAX_ELEMENTS: u64 = 1 << 28;

/// A tensor as stored on disk: shape plus flat row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorData {
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

impl TensorData {
    pub fn new(dims: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        let expect: usize = dims.iter().product();
        if values.len() != expect {
            return Err(Error::validation(format!(
                "tensor data length {} does not match dims {:?}",
                values.len(),
                dims
            )));
        }
        Ok(TensorData { dims, values })
    }
}

pub fn encode(tensor: &TensorData, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(tensor.dims.len() as u32).to_le_bytes())?;
    for &d in &tensor.dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &v in &tensor.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn decode(r: &mut impl Read, context: &Path) -> Result<TensorData> {
    let fmt = |reason: String| Error::format(context, reason);
    let io_err = |e: std::io::Error| Error::io(context, e);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(fmt(format!("bad magic {magic:?}, expected \"FPT1\"")));
    }

    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let rank = u32::from_le_bytes(u32buf) as usize;
    if rank > 8 {
        return Err(fmt(format!("implausible tensor rank {rank}")));
    }

    let mut dims = Vec::with_capacity(rank);
    let mut count: u64 = 1;
    for _ in 0..rank {
        r.read_exact(&mut u32buf).map_err(io_err)?;
        let d = u32::from_le_bytes(u32buf) as usize;
        dims.push(d);
        count = count.saturating_mul(d as u64);
    }
    if count > MAX_ELEMENTS {
        return Err(fmt(format!("tensor dims {dims:?} exceed size limit")));
    }

    let mut values = vec![0f32; count as usize];
    let mut buf = vec![0u8; count as usize * 4];
    r.read_exact(&mut buf).map_err(io_err)?;
    for (v, chunk) in values.iter_mut().zip(buf.chunks_exact(4)) {
        *v = f32::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(TensorData { dims, values })
}

pub fn write_tensor(path: &Path, tensor: &TensorData) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(tensor, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<TensorData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let tensor = decode(&mut r, path)?;
    // trailing bytes mean the file is not what we think it is
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(tensor),
        Ok(_) => Err(Error::format(path, "trailing bytes after tensor payload")),
        Err(e) => Err(Error::io(path, e)),
    }
}
