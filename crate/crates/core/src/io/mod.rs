//! On-disk formats: FPT1 tensors, PGM images, PNG heatmaps, dataset
//! manifests, and FPW1 network checkpoints.

pub mod fpt;
pub mod fpw;
pub mod manifest;
pub mod pgm;
pub mod png;

pub use fpt::{read_tensor, write_tensor, TensorData};
pub use manifest::{DatasetManifest, SceneEntry};
