//! The two demodulation networks and their checkpoint glue.
//!
//! Stage one is a plain residual stack that strips the carrier from a single
//! fringe frame, leaving the background. Stage two looks at (fringe,
//! background) through two parallel paths, one at full resolution and one
//! through a x2 down-up bottleneck, and emits the arctangent numerator and
//! denominator. Both work on values normalized to O(1); the scaling constants
//! travel with the weights in every checkpoint.

use crate::error::{Error, Result};
use crate::field::{wrap_phase, Grid, Image, PhaseField, PhasorField};
use crate::io::fpt::TensorData;
use crate::io::fpw::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointHeader, TensorEntry};
use crate::nn::layers::{Conv2d, Downsample2x, Layer, Relu, ResidualBlock, Sequential, Upsample2x};
use crate::nn::ops::{concat_channels, split_channels};
use crate::nn::{fs, Scalar, Tensor};
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Checkpoint architecture tags. Loaders refuse a mismatch so a background
/// net can never be mistaken for a phasor net.
pub const ARCH_CNN1: &str = "cnn1-resstack/1";
pub const ARCH_CNN2: &str = "cnn2-twoscale/1";
pub const ARCH_DIRECT: &str = "direct-resstack/1";

/// Shape of the background-estimation net (and of the direct-regression
/// baseline, which reuses the same stack).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnn1Config {
    pub base_channels: usize,
    pub n_residual_blocks: usize,
}

impl Default for Cnn1Config {
    fn default() -> Self {
        Cnn1Config {
            base_channels: 32,
            n_residual_blocks: 4,
        }
    }
}

/// Shape of the phasor net. Both paths share the width and block count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnn2Config {
    pub base_channels: usize,
    pub n_residual_blocks: usize,
}

impl Default for Cnn2Config {
    fn default() -> Self {
        Cnn2Config {
            base_channels: 32,
            n_residual_blocks: 4,
        }
    }
}

fn check_widths(base_channels: usize, n_residual_blocks: usize) -> Result<()> {
    if base_channels == 0 {
        return Err(Error::config("base_channels must be positive"));
    }
    if n_residual_blocks == 0 {
        return Err(Error::config("n_residual_blocks must be positive"));
    }
    Ok(())
}

/// Scaling between sensor counts and the O(1) values the nets train on.
/// Intensities divide by the sensor maximum; the phasor pair additionally
/// divides by N/2 so that M and D land in roughly [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// Largest representable intensity, 2^bits - 1.
    pub maxval: f64,
    /// Phase-shift frame count N behind the (N/2) phasor convention.
    pub frames: usize,
}

impl Normalization {
    pub fn new(maxval: f64, frames: usize) -> Result<Self> {
        if !(maxval > 0.0) || !maxval.is_finite() {
            return Err(Error::config(format!(
                "normalization maxval must be positive and finite, got {maxval}"
            )));
        }
        if frames < 3 {
            return Err(Error::config(format!(
                "normalization frame count must be at least 3, got {frames}"
            )));
        }
        Ok(Normalization { maxval, frames })
    }

    /// The phasor convention constant c = N/2.
    pub fn scale_c(&self) -> f64 {
        self.frames as f64 / 2.0
    }

    /// What one unit of normalized M or D is worth in count-radians:
    /// (N/2) * maxval.
    pub fn phasor_scale(&self) -> f64 {
        self.scale_c() * self.maxval
    }
}

/// conv -> ReLU -> residual blocks -> conv -> ReLU -> linear conv head.
pub struct ResStackNet<T: Scalar> {
    net: Sequential<T>,
    pub config: Cnn1Config,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl<T: Scalar> ResStackNet<T> {
    pub fn new(config: &Cnn1Config, in_ch: usize, out_ch: usize, seed: u64) -> Result<Self> {
        check_widths(config.base_channels, config.n_residual_blocks)?;
        if in_ch == 0 || out_ch == 0 {
            return Err(Error::config("net channel counts must be positive"));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let c = config.base_channels;
        let mut layers: Vec<Box<dyn Layer<T>>> = vec![
            Box::new(Conv2d::new(&mut rng, in_ch, c, 3, 1, 1)?),
            Box::new(Relu::new()),
        ];
        for _ in 0..config.n_residual_blocks {
            layers.push(Box::new(ResidualBlock::new(&mut rng, c)?));
        }
        layers.push(Box::new(Conv2d::new(&mut rng, c, c, 3, 1, 1)?));
        layers.push(Box::new(Relu::new()));
        layers.push(Box::new(Conv2d::new(&mut rng, c, out_ch, 3, 1, 1)?));
        Ok(ResStackNet {
            net: Sequential::new(layers),
            config: config.clone(),
            in_channels: in_ch,
            out_channels: out_ch,
        })
    }
}

impl<T: Scalar> Layer<T> for ResStackNet<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.net.forward(x)
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        self.net.backward(gy)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.net.visit_params(f);
    }
}

/// Two parallel views of the same input fused into a linear head. Path 1
/// stays at full resolution; path 2 runs through a stride-2 bottleneck and
/// is upsampled back before the channel concatenation.
pub struct TwoScaleNet<T: Scalar> {
    path1: Sequential<T>,
    path2: Sequential<T>,
    fuse: Sequential<T>,
    pub config: Cnn2Config,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl<T: Scalar> TwoScaleNet<T> {
    pub fn new(config: &Cnn2Config, in_ch: usize, out_ch: usize, seed: u64) -> Result<Self> {
        check_widths(config.base_channels, config.n_residual_blocks)?;
        if in_ch == 0 || out_ch == 0 {
            return Err(Error::config("net channel counts must be positive"));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let c = config.base_channels;

        let mut path1: Vec<Box<dyn Layer<T>>> = vec![
            Box::new(Conv2d::new(&mut rng, in_ch, c, 3, 1, 1)?),
            Box::new(Relu::new()),
        ];
        for _ in 0..config.n_residual_blocks {
            path1.push(Box::new(ResidualBlock::new(&mut rng, c)?));
        }

        let mut path2: Vec<Box<dyn Layer<T>>> = vec![
            Box::new(Downsample2x::new(&mut rng, in_ch, c)?),
            Box::new(Relu::new()),
        ];
        for _ in 0..config.n_residual_blocks {
            path2.push(Box::new(ResidualBlock::new(&mut rng, c)?));
        }
        path2.push(Box::new(Upsample2x::new(&mut rng, c, c)?));
        path2.push(Box::new(Relu::new()));

        let fuse: Vec<Box<dyn Layer<T>>> = vec![
            Box::new(Conv2d::new(&mut rng, 2 * c, c, 3, 1, 1)?),
            Box::new(Relu::new()),
            Box::new(Conv2d::new(&mut rng, c, out_ch, 3, 1, 1)?),
        ];

        Ok(TwoScaleNet {
            path1: Sequential::new(path1),
            path2: Sequential::new(path2),
            fuse: Sequential::new(fuse),
            config: config.clone(),
            in_channels: in_ch,
            out_channels: out_ch,
        })
    }
}

impl<T: Scalar> Layer<T> for TwoScaleNet<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y1 = self.path1.forward(x)?;
        let y2 = self.path2.forward(x)?;
        let fused = concat_channels(&y1, &y2)?;
        self.fuse.forward(&fused)
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        let gf = self.fuse.backward(gy)?;
        let (g1, g2) = split_channels(&gf, self.config.base_channels)?;
        let gx1 = self.path1.backward(&g1)?;
        let gx2 = self.path2.backward(&g2)?;
        let mut gx = gx1;
        for (a, &b) in gx.data_mut().iter_mut().zip(gx2.data()) {
            *a = *a + b;
        }
        Ok(gx)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.path1.visit_params(&mut |n, t| f(&format!("path1.{n}"), t));
        self.path2.visit_params(&mut |n, t| f(&format!("path2.{n}"), t));
        self.fuse.visit_params(&mut |n, t| f(&format!("fuse.{n}"), t));
    }
}

/// Packs one image per batch row, one plane per channel, scaled by 1/scale.
/// All planes must share the image dimensions.
pub fn planes_to_batch<T: Scalar>(planes: &[Vec<&Image>], scale: f64) -> Result<Tensor<T>> {
    let Some(first) = planes.first().and_then(|p| p.first()) else {
        return Err(Error::validation("batch must contain at least one image"));
    };
    let (w, h) = (first.width(), first.height());
    let channels = planes[0].len();
    let inv = 1.0 / scale;
    let mut t = Tensor::zeros([planes.len(), channels, h, w]);
    for (ni, row) in planes.iter().enumerate() {
        if row.len() != channels {
            return Err(Error::validation("batch rows must have equal channel counts"));
        }
        for (ci, img) in row.iter().enumerate() {
            if img.width() != w || img.height() != h {
                return Err(Error::validation(format!(
                    "batch image {}x{} does not match {}x{}",
                    img.width(),
                    img.height(),
                    w,
                    h
                )));
            }
            let base = (ni * channels + ci) * h * w;
            for (dst, &v) in t.data_mut()[base..base + h * w].iter_mut().zip(img.data()) {
                *dst = fs::<T>(v * inv);
            }
        }
    }
    Ok(t)
}

/// Extracts one channel of one batch row back into an image, scaled by
/// `scale` (the inverse of the normalization applied on the way in).
pub fn batch_to_image<T: Scalar>(t: &Tensor<T>, ni: usize, ci: usize, scale: f64) -> Image {
    let [_, _, h, w] = t.dims();
    Grid::from_fn(w, h, |x, y| t.at(ni, ci, y, x).to_f64().unwrap() * scale)
}

/// Background estimate from a single fringe frame. The input is divided by
/// the sensor maximum before the net sees it; the output comes back in
/// intensity counts.
pub fn cnn1_forward(
    net: &mut ResStackNet<f32>,
    norm: &Normalization,
    fringe: &Image,
) -> Result<Image> {
    let x = planes_to_batch::<f32>(&[vec![fringe]], norm.maxval)?;
    let y = net.forward(&x)?;
    Ok(batch_to_image(&y, 0, 0, norm.maxval))
}

/// Phasor estimate from a fringe frame and a background estimate. Output
/// channels are de-normalized into the (N/2)-scaled M and D convention, so
/// the field is directly comparable with the phase-shifting closed form.
pub fn cnn2_forward(
    net: &mut TwoScaleNet<f32>,
    norm: &Normalization,
    fringe: &Image,
    background: &Image,
) -> Result<PhasorField> {
    if !fringe.same_dims(background) {
        return Err(Error::validation(format!(
            "fringe {}x{} and background {}x{} must match",
            fringe.width(),
            fringe.height(),
            background.width(),
            background.height()
        )));
    }
    let x = planes_to_batch::<f32>(&[vec![fringe, background]], norm.maxval)?;
    let y = net.forward(&x)?;
    let numerator = batch_to_image(&y, 0, 0, norm.phasor_scale());
    let denominator = batch_to_image(&y, 0, 1, norm.phasor_scale());
    PhasorField::new(numerator, denominator, norm.scale_c())
}

/// The full two-stage pipeline: background, phasor, arctangent.
pub fn demod_neural(
    cnn1: &mut ResStackNet<f32>,
    cnn2: &mut TwoScaleNet<f32>,
    norm: &Normalization,
    fringe: &Image,
) -> Result<PhaseField> {
    let background = cnn1_forward(cnn1, norm, fringe)?;
    let phasor = cnn2_forward(cnn2, norm, fringe, &background)?;
    Ok(crate::classical::phase_from_phasor(&phasor))
}

/// The single-net baseline: the stack regresses phi/pi directly and the
/// output is rescaled and rewrapped.
pub fn demod_direct(
    net: &mut ResStackNet<f32>,
    norm: &Normalization,
    fringe: &Image,
) -> Result<PhaseField> {
    let x = planes_to_batch::<f32>(&[vec![fringe]], norm.maxval)?;
    let y = net.forward(&x)?;
    let [_, _, h, w] = y.dims();
    let values = Grid::from_fn(w, h, |xx, yy| {
        wrap_phase(y.at(0, 0, yy, xx).to_f64().unwrap() * PI)
    });
    Ok(PhaseField::wrapped(values))
}

#[derive(Serialize, Deserialize)]
struct Hyper<C> {
    config: C,
    normalization: Normalization,
    in_channels: usize,
    out_channels: usize,
}

fn collect_params(layer: &mut dyn Layer<f32>) -> Result<(Vec<TensorEntry>, Vec<TensorData>)> {
    let mut entries = Vec::new();
    let mut tensors = Vec::new();
    let mut bad = None;
    layer.visit_params(&mut |name, t| {
        entries.push(TensorEntry {
            name: name.to_string(),
            dims: t.dims().to_vec(),
        });
        match TensorData::new(t.dims().to_vec(), t.data().to_vec()) {
            Ok(td) => tensors.push(td),
            Err(e) => bad = Some(e),
        }
    });
    match bad {
        Some(e) => Err(e),
        None => Ok((entries, tensors)),
    }
}

fn fill_params(layer: &mut dyn Layer<f32>, ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut used = 0usize;
    let mut bad = None;
    layer.visit_params(&mut |name, t| {
        if bad.is_some() {
            return;
        }
        let Some(td) = ckpt.tensor(name) else {
            bad = Some(format!("missing tensor {name:?}"));
            return;
        };
        if td.dims != t.dims() {
            bad = Some(format!(
                "tensor {name:?} has dims {:?}, expected {:?}",
                td.dims,
                t.dims()
            ));
            return;
        }
        t.data_mut().copy_from_slice(&td.values);
        used += 1;
    });
    if let Some(reason) = bad {
        return Err(Error::format(path, reason));
    }
    if used != ckpt.header.tensors.len() {
        return Err(Error::format(
            path,
            format!(
                "checkpoint carries {} tensors but the net has {used} parameters",
                ckpt.header.tensors.len()
            ),
        ));
    }
    Ok(())
}

fn save_net<C: Serialize>(
    path: &Path,
    arch: &str,
    layer: &mut dyn Layer<f32>,
    config: &C,
    norm: &Normalization,
    in_channels: usize,
    out_channels: usize,
    seed: u64,
    step: u64,
) -> Result<()> {
    let (entries, tensors) = collect_params(layer)?;
    let hyper = serde_json::to_value(Hyper {
        config,
        normalization: *norm,
        in_channels,
        out_channels,
    })
    .map_err(|e| Error::format(path, format!("hyperparameters not serializable: {e}")))?;
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            arch: arch.to_string(),
            hyper,
            seed,
            step,
            tensors: entries,
        },
        tensors,
    };
    write_checkpoint(path, &ckpt)
}

fn load_net<C: for<'de> Deserialize<'de>>(path: &Path, arch: &str) -> Result<(Checkpoint, Hyper<C>)> {
    let ckpt = read_checkpoint(path)?;
    if ckpt.header.arch != arch {
        return Err(Error::format(
            path,
            format!("architecture {:?}, expected {arch:?}", ckpt.header.arch),
        ));
    }
    let hyper: Hyper<C> = serde_json::from_value(ckpt.header.hyper.clone())
        .map_err(|e| Error::format(path, format!("bad hyperparameter block: {e}")))?;
    Ok((ckpt, hyper))
}

pub fn save_resstack(
    path: &Path,
    arch: &str,
    net: &mut ResStackNet<f32>,
    norm: &Normalization,
    seed: u64,
    step: u64,
) -> Result<()> {
    let (config, in_ch, out_ch) = (net.config.clone(), net.in_channels, net.out_channels);
    save_net(path, arch, net, &config, norm, in_ch, out_ch, seed, step)
}

pub fn load_resstack(path: &Path, arch: &str) -> Result<(ResStackNet<f32>, Normalization)> {
    let (ckpt, hyper) = load_net::<Cnn1Config>(path, arch)?;
    let mut net = ResStackNet::new(
        &hyper.config,
        hyper.in_channels,
        hyper.out_channels,
        ckpt.header.seed,
    )?;
    fill_params(&mut net, &ckpt, path)?;
    Ok((net, hyper.normalization))
}

pub fn save_cnn2(
    path: &Path,
    net: &mut TwoScaleNet<f32>,
    norm: &Normalization,
    seed: u64,
    step: u64,
) -> Result<()> {
    let (config, in_ch, out_ch) = (net.config.clone(), net.in_channels, net.out_channels);
    save_net(path, ARCH_CNN2, net, &config, norm, in_ch, out_ch, seed, step)
}

pub fn load_cnn2(path: &Path) -> Result<(TwoScaleNet<f32>, Normalization)> {
    let (ckpt, hyper) = load_net::<Cnn2Config>(path, ARCH_CNN2)?;
    let mut net = TwoScaleNet::new(
        &hyper.config,
        hyper.in_channels,
        hyper.out_channels,
        ckpt.header.seed,
    )?;
    fill_params(&mut net, &ckpt, path)?;
    Ok((net, hyper.normalization))
}
