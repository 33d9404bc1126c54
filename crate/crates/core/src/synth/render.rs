//! Rendering scenes into phase-shifted fringe stacks, with the closed-form
//! ground truth the learned demodulator trains against.

use crate::error::{Error, Result};
use crate::field::{Image, PhaseField};
use crate::synth::scene::SceneSpec;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Everything the downstream stages may want to compare against, all
/// noise-free and in intensity counts.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Absolute (unwrapped) phase in radians.
    pub phase: PhaseField,
    /// Background intensity A.
    pub background: Image,
    /// Effective modulation B (isolation floor applied).
    pub modulation: Image,
    /// Arctangent numerator M = (N/2) B sin(Phi).
    pub numerator: Image,
    /// Arctangent denominator D = (N/2) B cos(Phi).
    pub denominator: Image,
}

/// A rendered N-step stack: clean frames plus ground truth.
#[derive(Debug, Clone)]
pub struct FringeStack {
    pub frames: Vec<Image>,
    pub truth: GroundTruth,
}

/// One clean frame `I = A + B cos(Phi - delta)`.
pub fn fringe_frame(phase: &PhaseField, a: &Image, b: &Image, delta: f64) -> Image {
    Image::from_fn(phase.width(), phase.height(), |x, y| {
        a.at(x, y) + b.at(x, y) * (phase.values.at(x, y) - delta).cos()
    })
}

/// Renders the clean N-step stack at the scene's carrier frequency,
/// with shifts `delta_n = 2 pi n / N`.
pub fn synth_stack(spec: &SceneSpec, frames: usize) -> Result<FringeStack> {
    synth_stack_at(spec, frames, spec.carrier_freq)
}

/// Same, at an arbitrary projection frequency (used by temporal unwrapping).
pub fn synth_stack_at(spec: &SceneSpec, frames: usize, freq: f64) -> Result<FringeStack> {
    if frames < 3 {
        return Err(Error::validation(format!(
            "phase shifting needs at least 3 frames, got {frames}"
        )));
    }
    let phase = spec.phase_at_freq(freq);
    let (a, b) = spec.reflectance();
    let n = frames as f64;
    let stack = (0..frames)
        .map(|i| fringe_frame(&phase, &a, &b, 2.0 * PI * i as f64 / n))
        .collect();

    let half_n = n / 2.0;
    let numerator = Image::from_fn(spec.width, spec.height, |x, y| {
        half_n * b.at(x, y) * phase.values.at(x, y).sin()
    });
    let denominator = Image::from_fn(spec.width, spec.height, |x, y| {
        half_n * b.at(x, y) * phase.values.at(x, y).cos()
    });

    Ok(FringeStack {
        frames: stack,
        truth: GroundTruth {
            phase,
            background: a,
            modulation: b,
            numerator,
            denominator,
        },
    })
}

/// Camera model: additive Gaussian noise, then rounding to integer counts
/// clamped at the sensor range `[0, 2^bits - 1]`.
pub fn degrade(image: &Image, noise_sigma: f64, bits: u32, seed: u64) -> Result<Image> {
    if !(1..=16).contains(&bits) {
        return Err(Error::validation(format!(
            "bit depth must be in 1..=16, got {bits}"
        )));
    }
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::validation(format!(
            "noise sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }
    let maxval = ((1u32 << bits) - 1) as f64;
    let mut rng = StdRng::seed_from_u64(seed);
    let data = if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::validation(format!("bad noise distribution: {e}")))?;
        image
            .data()
            .iter()
            .map(|&v| (v + normal.sample(&mut rng)).round().clamp(0.0, maxval))
            .collect()
    } else {
        image
            .data()
            .iter()
            .map(|&v| v.round().clamp(0.0, maxval))
            .collect()
    };
    Image::from_vec(image.width(), image.height(), data)
}
