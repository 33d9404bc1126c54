//! Randomized scene distribution and dataset assembly.
//!
//! Every random draw is keyed off one root seed through a splitmix64
//! derivation chain, so a dataset is a pure function of its parameters.

use crate::error::{Error, Result};
use crate::field::Image;
use crate::synth::poly::PolyField;
use crate::synth::render::{degrade, synth_stack, GroundTruth};
use crate::synth::scene::{SceneSpec, Surface};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// splitmix64 finalizer; decorrelates seed streams.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for a named stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}

/// Peak smooth-object slope, as a fraction of the carrier slope, drawn per
/// scene from a family-specific range. Smooth families stay gentle so
/// single-frame methods resolve them cleanly; mixed and isolated scenes
/// run steep enough that a fixed Fourier side-band starts clipping local
/// frequencies, which is the failure mode a learned demodulator should
/// survive.
fn slope_range(kind: SceneKind) -> (f64, f64) {
    match kind {
        SceneKind::Bumps | SceneKind::Domes | SceneKind::Plateaus => (0.15, 0.35),
        SceneKind::Isolated => (0.2, 0.5),
        SceneKind::Mixed => (0.3, 0.6),
    }
}

/// Largest allowed smooth-object phase excursion, radians.
const MAX_SMOOTH_PHASE: f64 = 16.0;

/// Scene families the generator draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// Smooth Gaussian bumps only.
    Bumps,
    /// Raised-cosine domes only.
    Domes,
    /// Smooth objects plus one sharp feature.
    Mixed,
    /// Flat disks with sharp edges.
    Plateaus,
    /// Objects on a dark backdrop (reflectance floor outside footprints).
    Isolated,
}

impl SceneKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SceneKind::Bumps => "bumps",
            SceneKind::Domes => "domes",
            SceneKind::Mixed => "mixed",
            SceneKind::Plateaus => "plateaus",
            SceneKind::Isolated => "isolated",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            SceneKind::Bumps,
            SceneKind::Domes,
            SceneKind::Mixed,
            SceneKind::Plateaus,
            SceneKind::Isolated,
        ]
        .into_iter()
        .find(|k| k.as_str() == name)
    }

    /// Families that render a discontinuity (step edges or sharp rims);
    /// the wrap-containing evaluation subsets key off this.
    pub fn has_discontinuity(self) -> bool {
        matches!(
            self,
            SceneKind::Mixed | SceneKind::Plateaus | SceneKind::Isolated
        )
    }

    fn draw(rng: &mut StdRng) -> Self {
        // weights: smooth families dominate, sharp and isolated stay common
        // enough that the learned demodulator sees them every epoch
        let u: f64 = rng.random();
        match u {
            u if u < 0.30 => SceneKind::Bumps,
            u if u < 0.50 => SceneKind::Domes,
            u if u < 0.70 => SceneKind::Mixed,
            u if u < 0.85 => SceneKind::Plateaus,
            _ => SceneKind::Isolated,
        }
    }
}

/// Dataset generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenParams {
    pub width: usize,
    pub height: usize,
    /// Phase-shift frame count N.
    pub frames: usize,
    /// Carrier frequency in fringes across the width.
    pub carrier_freq: f64,
    /// Sensor bit depth of the stored frames.
    pub bits: u32,
    /// Additive noise sigma in counts.
    pub noise_sigma: f64,
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            width: 128,
            height: 128,
            frames: 12,
            carrier_freq: 32.0,
            bits: 8,
            noise_sigma: 2.0,
            seed: 1,
            train: 800,
            val: 150,
            test: 50,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::validation("image dimensions must be at least 16"));
        }
        if self.frames < 3 {
            return Err(Error::validation("frame count must be at least 3"));
        }
        if !(1..=16).contains(&self.bits) {
            return Err(Error::validation("bit depth must be in 1..=16"));
        }
        // f = W/4 (4 px per fringe) is the densest supported carrier; the
        // slope cap then keeps local frequency clear of Nyquist
        let max_freq = self.width as f64 / 4.0;
        if self.carrier_freq < 4.0 || self.carrier_freq > max_freq {
            return Err(Error::validation(format!(
                "carrier frequency {} outside usable range [4, {max_freq}]",
                self.carrier_freq
            )));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::validation("noise sigma must be non-negative"));
        }
        Ok(())
    }

    pub fn maxval(&self) -> f64 {
        ((1u32 << self.bits) - 1) as f64
    }
}

/// One generated scene: degraded frames plus clean ground truth.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub kind: SceneKind,
    pub seed: u64,
    pub spec: SceneSpec,
    pub frames: Vec<Image>,
    pub truth: GroundTruth,
}

fn range(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn signed(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    let v = range(rng, lo, hi);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

fn bump(rng: &mut StdRng, w: f64, h: f64, s: f64) -> Surface {
    Surface::Bump {
        cx: range(rng, 0.25 * w, 0.75 * w),
        cy: range(rng, 0.25 * h, 0.75 * h),
        sigma: range(rng, 8.0, 18.0) * s,
        amplitude: signed(rng, 2.0, 10.0),
    }
}

fn dome(rng: &mut StdRng, w: f64, h: f64, s: f64) -> Surface {
    let radius = range(rng, 16.0, 34.0) * s;
    Surface::Dome {
        cx: range(rng, 0.3 * w, 0.7 * w),
        cy: range(rng, 0.3 * h, 0.7 * h),
        radius,
        amplitude: signed(rng, 2.0, (0.3 * radius).max(2.5)),
    }
}

fn plateau(rng: &mut StdRng, w: f64, h: f64, s: f64) -> Surface {
    Surface::Plateau {
        cx: range(rng, 0.25 * w, 0.75 * w),
        cy: range(rng, 0.25 * h, 0.75 * h),
        radius: range(rng, 12.0, 28.0) * s,
        height: signed(rng, 2.0, 8.0),
    }
}

fn step(rng: &mut StdRng, w: f64, h: f64) -> Surface {
    let angle = range(rng, 0.0, 2.0 * PI);
    Surface::Step {
        cx: range(rng, 0.35 * w, 0.65 * w),
        cy: range(rng, 0.35 * h, 0.65 * h),
        nx: angle.cos(),
        ny: angle.sin(),
        height: signed(rng, 2.0, 6.0),
    }
}

fn sample_objects(rng: &mut StdRng, kind: SceneKind, w: f64, h: f64, s: f64) -> Vec<Surface> {
    let mut objects = Vec::new();
    match kind {
        SceneKind::Bumps => {
            for _ in 0..rng.random_range(2..=5usize) {
                objects.push(bump(rng, w, h, s));
            }
        }
        SceneKind::Domes => {
            for _ in 0..rng.random_range(1..=2usize) {
                objects.push(dome(rng, w, h, s));
            }
        }
        SceneKind::Mixed => {
            for _ in 0..rng.random_range(1..=2usize) {
                objects.push(bump(rng, w, h, s));
            }
            if rng.random::<bool>() {
                objects.push(plateau(rng, w, h, s));
            } else {
                objects.push(step(rng, w, h));
            }
        }
        SceneKind::Plateaus => {
            for _ in 0..rng.random_range(1..=3usize) {
                objects.push(plateau(rng, w, h, s));
            }
        }
        SceneKind::Isolated => {
            for _ in 0..rng.random_range(1..=3usize) {
                if rng.random::<bool>() {
                    objects.push(dome(rng, w, h, s));
                } else {
                    objects.push(plateau(rng, w, h, s));
                }
            }
        }
    }
    objects
}

fn sample_reflectance(rng: &mut StdRng, scale: f64) -> (PolyField, PolyField) {
    let a0 = range(rng, 95.0, 125.0);
    let b0 = range(rng, 65.0, (a0 - 15.0).min(100.0));
    let mut field = |c0: f64| {
        PolyField::new([
            c0,
            c0 * range(rng, -0.12, 0.12),
            c0 * range(rng, -0.12, 0.12),
            c0 * range(rng, -0.08, 0.08),
            c0 * range(rng, -0.08, 0.08),
            c0 * range(rng, -0.08, 0.08),
        ])
    };
    (field(a0).scaled(scale), field(b0).scaled(scale))
}

/// Draws one scene of the given family.
///
/// Post-conditions, by construction:
/// - `min(A - B) >= 2` and `max(A + B) <= 0.98 maxval` (in counts, before
///   the isolation floor, which only shrinks both),
/// - the peak smooth-object slope lands inside the family's share of the
///   carrier slope and the summed smooth excursion stays phase-bounded.
pub fn random_scene(
    width: usize,
    height: usize,
    carrier_freq: f64,
    bits: u32,
    kind: SceneKind,
    seed: u64,
) -> SceneSpec {
    let mut rng = StdRng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let s = w.min(h) / 128.0;
    let maxval = ((1u32 << bits) - 1) as f64;
    let scale = maxval / 255.0;

    let objects = sample_objects(&mut rng, kind, w, h, s);
    let (background, modulation) = sample_reflectance(&mut rng, scale);
    let floor = if kind == SceneKind::Isolated {
        range(&mut rng, 0.02, 0.10)
    } else {
        1.0
    };

    let mut spec = SceneSpec {
        width,
        height,
        carrier_freq,
        objects,
        background,
        modulation,
        floor,
    };

    // normalize the smooth part to a sampled peak slope, then cap its
    // excursion; both keep fringes locally resolvable
    let slope = spec.max_smooth_slope();
    if slope > 0.0 {
        let (lo, hi) = slope_range(kind);
        let target = range(&mut rng, lo, hi) * 2.0 * PI * carrier_freq / w;
        let mut k = target / slope;
        let peak = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| {
                spec.objects
                    .iter()
                    .filter(|o| o.is_smooth())
                    .map(|o| o.eval(x as f64, y as f64))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0f64, f64::max);
        if peak * k > MAX_SMOOTH_PHASE {
            k = MAX_SMOOTH_PHASE / peak;
        }
        for obj in spec.objects.iter_mut().filter(|o| o.is_smooth()) {
            obj.scale_amplitude(k);
        }
    }

    // keep intensities physical: 2 <= A - B and A + B <= 0.98 maxval
    let a = spec.background.render(width, height);
    let b = spec.modulation.render(width, height);
    let mut k = 1.0f64;
    for (&av, &bv) in a.data().iter().zip(b.data()) {
        if bv > 0.0 {
            k = k.min((av - 2.0 * scale) / bv);
            k = k.min((0.98 * maxval - av) / bv);
        } else {
            // negative modulation is nonphysical; force a rescale below
            k = 0.0;
        }
    }
    if k < 1.0 {
        spec.modulation = spec.modulation.scaled(k.max(0.0));
    }

    spec
}

fn split_base(params: &GenParams, split: &str) -> Result<usize> {
    match split {
        "train" => Ok(0),
        "val" => Ok(params.train),
        "test" => Ok(params.train + params.val),
        other => Err(Error::validation(format!("unknown split {other:?}"))),
    }
}

/// Generates one scene of a split: spec, clean truth, degraded frames.
pub fn gen_scene(params: &GenParams, split: &str, index: usize) -> Result<Sample> {
    params.validate()?;
    let global = split_base(params, split)? + index;
    let seed = derive_seed(params.seed, global as u64);
    let mut rng = StdRng::seed_from_u64(derive_seed(seed, 0));
    let kind = SceneKind::draw(&mut rng);

    let spec = random_scene(
        params.width,
        params.height,
        params.carrier_freq,
        params.bits,
        kind,
        derive_seed(seed, 1),
    );
    let stack = synth_stack(&spec, params.frames)?;
    let frames = stack
        .frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            degrade(
                frame,
                params.noise_sigma,
                params.bits,
                derive_seed(seed, 1000 + i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Sample {
        id: format!("{split}_{index:04}"),
        kind,
        seed,
        spec,
        frames,
        truth: stack.truth,
    })
}

/// Generates a full dataset in memory. Intended for tests and small runs;
/// the CLI streams scenes to disk one at a time instead.
pub fn gen_dataset(params: &GenParams) -> Result<Vec<Sample>> {
    let mut samples = Vec::with_capacity(params.train + params.val + params.test);
    for (split, count) in [
        ("train", params.train),
        ("val", params.val),
        ("test", params.test),
    ] {
        for i in 0..count {
            samples.push(gen_scene(params, split, i)?);
        }
    }
    Ok(samples)
}
