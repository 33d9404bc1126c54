//! Subcommand implementations plus the small amount of I/O glue they
//! share.

pub mod compare;
pub mod demod;
pub mod eval;
pub mod gen;
pub mod info;
pub mod train;
pub mod unwrap;

use fringe_core::error::{Error, Result};
use fringe_core::field::{wrap_phase, Grid, Image, Mask, PhaseField};
use fringe_core::io::pgm::read_pgm;
use std::path::{Path, PathBuf};

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A value that must arrive through a flag or its config key.
pub fn require(value: Option<String>, flag: &str, key: &str) -> Result<String> {
    value.ok_or_else(|| Error::config(format!("missing {flag} (or config key `{key}`)")))
}

/// Reads one image, dispatching on extension: `.pgm` sensor frames or
/// `.fpt` float fields.
pub fn read_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => Ok(read_pgm(path)?.0),
        Some("fpt") => crate::store::read_field(path),
        _ => Err(Error::format(path, "expected a .pgm or .fpt file")),
    }
}

/// Loads a wrapped phase map, re-wrapping each value: f32 storage rounds
/// +pi just past the open end of (-pi, pi].
pub fn read_wrapped(path: &Path) -> Result<PhaseField> {
    let img = crate::store::read_field(path)?;
    let (w, h) = (img.width(), img.height());
    let values = Grid::from_fn(w, h, |x, y| wrap_phase(*img.at(x, y)));
    Ok(PhaseField::wrapped(values))
}

/// Masks travel as 0/1 float fields.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let img = crate::store::read_field(path)?;
    Ok(Mask::from_fn(img.width(), img.height(), |x, y| {
        *img.at(x, y) > 0.5
    }))
}

pub fn mask_to_image(mask: &Mask) -> Image {
    Grid::from_fn(mask.width(), mask.height(), |x, y| {
        if *mask.at(x, y) {
            1.0
        } else {
            0.0
        }
    })
}

/// Collects a phase-shift stack from a directory in filename order. Sensor
/// frames (.pgm) win; a directory holding only .fpt fields is read as an
/// exact (unquantized) stack.
pub fn read_stack(dir: &Path) -> Result<Vec<Image>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut pgm: Vec<PathBuf> = Vec::new();
    let mut fpt: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => pgm.push(path),
            Some("fpt") => fpt.push(path),
            _ => {}
        }
    }
    let mut paths = if pgm.is_empty() { fpt } else { pgm };
    paths.sort();
    if paths.len() < 3 {
        return Err(Error::validation(format!(
            "stack at {} has {} frames, phase shifting needs at least 3",
            dir.display(),
            paths.len()
        )));
    }
    paths.iter().map(|p| read_image(p)).collect()
}
