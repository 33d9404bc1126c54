//! Binary PGM (P5) read/write for quantized fringe patterns.
//!
//! Samples are 1 byte for `maxval <= 255`, otherwise 2 bytes big-endian,
//! as the format requires.

use crate::error::{Error, Result};
use crate::field::Image;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes `image` as binary PGM. Values must already be integers in
/// `[0, maxval]`; anything else is a validation error, not silently clipped.
pub fn write_pgm(path: &Path, image: &Image, maxval: u32) -> Result<()> {
    if maxval == 0 || maxval > 65535 {
        return Err(Error::validation(format!(
            "pgm maxval must be in 1..=65535, got {maxval}"
        )));
    }
    for &v in image.data() {
        if v < 0.0 || v > maxval as f64 || v.fract() != 0.0 {
            return Err(Error::validation(format!(
                "pgm sample {v} not an integer in [0, {maxval}]"
            )));
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval);
    w.write_all(header.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    if maxval <= 255 {
        let bytes: Vec<u8> = image.data().iter().map(|&v| v as u8).collect();
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    } else {
        let mut bytes = Vec::with_capacity(image.len() * 2);
        for &v in image.data() {
            bytes.extend_from_slice(&(v as u16).to_be_bytes());
        }
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a binary PGM. Returns the image (samples as f64) and its maxval.
pub fn read_pgm(path: &Path) -> Result<(Image, u32)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;

    let fmt = |reason: &str| Error::format(path, reason);

    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "unexpected end of pgm header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if next_token(&bytes)? != "P5" {
        return Err(fmt("not a binary pgm (missing P5 signature)"));
    }
    let width: usize = next_token(&bytes)?
        .parse()
        .map_err(|_| fmt("bad width"))?;
    let height: usize = next_token(&bytes)?
        .parse()
        .map_err(|_| fmt("bad height"))?;
    let maxval: u32 = next_token(&bytes)?
        .parse()
        .map_err(|_| fmt("bad maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(fmt("maxval out of range"));
    }
    // exactly one whitespace byte separates header from raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(fmt("missing raster separator"));
    }
    pos += 1;

    let n = width * height;
    let raster = &bytes[pos..];
    let data: Vec<f64> = if maxval <= 255 {
        if raster.len() != n {
            return Err(fmt("raster size mismatch"));
        }
        raster.iter().map(|&b| b as f64).collect()
    } else {
        if raster.len() != n * 2 {
            return Err(fmt("raster size mismatch"));
        }
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
            .collect()
    };
    let image = Image::from_vec(width, height, data)?;
    Ok((image, maxval))
}
