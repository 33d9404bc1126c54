//! Dataset disk layout: one directory per scene under the dataset root,
//! PGM fringe frames plus FPT1 ground truth, indexed by the manifest.

use fringe_core::error::{Error, Result};
use fringe_core::field::{Image, PhaseField, PhasorField};
use fringe_core::io::fpt::{read_tensor, write_tensor, TensorData};
use fringe_core::io::manifest::{DatasetManifest, SceneEntry};
use fringe_core::io::pgm::{read_pgm, write_pgm};
use fringe_core::synth::render::GroundTruth;
use fringe_core::synth::scene::SceneSpec;
use fringe_core::synth::{PolyField, Sample, SceneKind};
use std::path::Path;

pub fn grid_to_tensor(img: &Image) -> TensorData {
    TensorData::new(
        vec![img.height(), img.width()],
        img.data().iter().map(|&v| v as f32).collect(),
    )
    .expect("grid dims are consistent by construction")
}

pub fn tensor_to_grid(t: &TensorData, context: &Path) -> Result<Image> {
    let [h, w] = t.dims[..] else {
        return Err(Error::format(
            context,
            format!("expected a [height, width] tensor, got dims {:?}", t.dims),
        ));
    };
    Image::from_vec(w, h, t.values.iter().map(|&v| v as f64).collect())
}

pub fn write_field(path: &Path, img: &Image) -> Result<()> {
    write_tensor(path, &grid_to_tensor(img))
}

pub fn read_field(path: &Path) -> Result<Image> {
    tensor_to_grid(&read_tensor(path)?, path)
}

/// Writes one scene's files under `root/<id>/` and returns its manifest
/// entry (paths relative to the root).
pub fn write_sample(root: &Path, sample: &Sample, maxval: u32) -> Result<SceneEntry> {
    let dir = root.join(&sample.id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let mut fringe = Vec::with_capacity(sample.frames.len());
    for (i, frame) in sample.frames.iter().enumerate() {
        let rel = format!("{}/fringe_{i:02}.pgm", sample.id);
        write_pgm(&root.join(&rel), frame, maxval)?;
        fringe.push(rel);
    }
    let rel = |name: &str| format!("{}/{name}.fpt", sample.id);
    write_field(&root.join(rel("background")), &sample.truth.background)?;
    write_field(&root.join(rel("numerator")), &sample.truth.numerator)?;
    write_field(&root.join(rel("denominator")), &sample.truth.denominator)?;
    write_field(&root.join(rel("phase")), &sample.truth.phase.values)?;

    Ok(SceneEntry {
        id: sample.id.clone(),
        split: sample.id.split('_').next().unwrap_or("train").to_string(),
        kind: sample.kind.as_str().to_string(),
        seed: sample.seed,
        fringe,
        background: rel("background"),
        numerator: rel("numerator"),
        denominator: rel("denominator"),
        phase: rel("phase"),
    })
}

/// Loads one scene back into a `Sample`. The stored dataset does not keep
/// the generating surface list, so the spec carries geometry only (the
/// trainers and evaluators read dimensions and carrier from it).
pub fn load_sample(root: &Path, manifest: &DatasetManifest, entry: &SceneEntry) -> Result<Sample> {
    let mut frames = Vec::with_capacity(entry.fringe.len());
    for rel in &entry.fringe {
        let (img, _) = read_pgm(&root.join(rel))?;
        frames.push(img);
    }
    let background = read_field(&root.join(&entry.background))?;
    let numerator = read_field(&root.join(&entry.numerator))?;
    let denominator = read_field(&root.join(&entry.denominator))?;
    let phase = read_field(&root.join(&entry.phase))?;

    // B is not stored separately; recover it from the phasor magnitude
    let scale_c = manifest.frames as f64 / 2.0;
    let modulation =
        PhasorField::new(numerator.clone(), denominator.clone(), scale_c)?.modulation();

    let kind = SceneKind::parse(&entry.kind).ok_or_else(|| {
        Error::format(
            root.join("manifest.json"),
            format!("scene {} has unknown kind {:?}", entry.id, entry.kind),
        )
    })?;
    Ok(Sample {
        id: entry.id.clone(),
        kind,
        seed: entry.seed,
        spec: SceneSpec {
            width: manifest.width,
            height: manifest.height,
            carrier_freq: manifest.carrier_freq,
            objects: Vec::new(),
            background: PolyField::constant(0.0),
            modulation: PolyField::constant(0.0),
            floor: 1.0,
        },
        frames,
        truth: GroundTruth {
            phase: PhaseField::unwrapped(phase),
            background,
            modulation,
            numerator,
            denominator,
        },
    })
}

/// Loads every scene of the named splits, in manifest order.
pub fn load_splits(root: &Path, manifest: &DatasetManifest, splits: &[&str]) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for entry in &manifest.scenes {
        if splits.contains(&entry.split.as_str()) {
            out.push(load_sample(root, manifest, entry)?);
        }
    }
    Ok(out)
}
