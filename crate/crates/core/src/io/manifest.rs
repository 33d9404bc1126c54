//! Dataset manifest: one JSON file at the dataset root describing every
//! generated scene and where its files live (paths relative to the root).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MANIFEST_FORMAT: &str = "fringe-dataset/1";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format: String,
    pub width: usize,
    pub height: usize,
    /// Phase-shift frame count N.
    pub frames: usize,
    /// Carrier frequency in fringes across the image width.
    pub carrier_freq: f64,
    /// Quantization depth of the stored fringe frames.
    pub bits: u32,
    /// Additive Gaussian noise sigma, in intensity counts.
    pub noise_sigma: f64,
    pub seed: u64,
    pub scenes: Vec<SceneEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEntry {
    pub id: String,
    /// One of "train", "val", "test".
    pub split: String,
    /// Scene family, for diagnostics only.
    pub kind: String,
    pub seed: u64,
    /// Quantized fringe frames, one per phase step.
    pub fringe: Vec<String>,
    /// Clean background A, intensity counts (FPT1).
    pub background: String,
    /// Clean arctangent numerator M and denominator D (FPT1).
    pub numerator: String,
    pub denominator: String,
    /// True absolute phase in radians (FPT1).
    pub phase: String,
}

impl DatasetManifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_NAME);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(&path, format!("manifest encode failed: {e}")))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::format(&path, format!("manifest parse failed: {e}")))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::format(
                &path,
                format!(
                    "unsupported manifest format {:?}, expected {:?}",
                    manifest.format, MANIFEST_FORMAT
                ),
            ));
        }
        Ok(manifest)
    }

    pub fn split<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a SceneEntry> {
        self.scenes.iter().filter(move |s| s.split == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DatasetManifest {
        DatasetManifest {
            format: MANIFEST_FORMAT.to_string(),
            width: 128,
            height: 128,
            frames: 12,
            carrier_freq: 32.0,
            bits: 8,
            noise_sigma: 2.0,
            seed: 7,
            scenes: vec![SceneEntry {
                id: "train_0000".into(),
                split: "train".into(),
                kind: "bumps".into(),
                seed: 99,
                fringe: (0..12).map(|n| format!("train_0000/fringe_{n:02}.pgm")).collect(),
                background: "train_0000/background.fpt".into(),
                numerator: "train_0000/numerator.fpt".into(),
                denominator: "train_0000/denominator.fpt".into(),
                phase: "train_0000/phase.fpt".into(),
            }],
        }
    }

    #[test]
    fn roundtrip() {
        let dir = std::env::temp_dir().join("fringe-manifest-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let m = sample();
        m.save(&dir).unwrap();
        let back = DatasetManifest::load(&dir).unwrap();
        assert_eq!(back.scenes.len(), 1);
        assert_eq!(back.scenes[0].id, "train_0000");
        assert_eq!(back.split("train").count(), 1);
        assert_eq!(back.split("val").count(), 0);
    }

    #[test]
    fn rejects_unknown_format() {
        let dir = std::env::temp_dir().join("fringe-manifest-badfmt");
        std::fs::create_dir_all(&dir).unwrap();
        let mut m = sample();
        m.format = "something-else/9".into();
        m.save(&dir).unwrap();
        assert!(DatasetManifest::load(&dir).is_err());
    }
}
