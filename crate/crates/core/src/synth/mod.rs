//! Synthetic fringe projection: parametric scenes rendered into
//! phase-shifted, noisy, quantized fringe stacks with exact ground truth.

pub mod dataset;
pub mod poly;
pub mod render;
pub mod scene;

pub use dataset::{derive_seed, gen_dataset, gen_scene, random_scene, GenParams, Sample, SceneKind};
pub use poly::PolyField;
pub use render::{degrade, fringe_frame, synth_stack, synth_stack_at, FringeStack, GroundTruth};
pub use scene::{SceneSpec, Surface};
