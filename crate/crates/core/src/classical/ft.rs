//! Fourier-transform demodulation: isolate the +1 carrier side-band with a
//! soft band-pass, inverse transform, and read the phase off the analytic
//! signal `z = (B/2) exp(i Phi)`.

use crate::classical::fft::{signed_bin, to_complex, Fft2};
use crate::error::{Error, Result};
use crate::field::{Image, PhasorField};

/// Band-pass geometry, in DFT bins.
#[derive(Debug, Clone)]
pub struct FtParams {
    /// Carrier frequency in fringes across the width (the +1 lobe center).
    pub carrier_freq: f64,
    /// Half-width of the pass box along x, bins. Default `carrier_freq / 2`.
    pub band_x: Option<f64>,
    /// Half-width along y, bins. Default matches `band_x` in angular
    /// frequency: `band_x * height / width`.
    pub band_y: Option<f64>,
    /// Raised-cosine transition width at the box edge, bins.
    pub edge_width: f64,
}

impl FtParams {
    pub fn new(carrier_freq: f64) -> Self {
        FtParams {
            carrier_freq,
            band_x: None,
            band_y: None,
            edge_width: 4.0,
        }
    }
}

/// Hann-edged box profile: 1 inside, cosine rolloff over `edge`, 0 at and
/// beyond `half`.
fn edge_weight(d: f64, half: f64, edge: f64) -> f64 {
    if d >= half {
        0.0
    } else if d <= half - edge {
        1.0
    } else {
        let t = (d - (half - edge)) / edge;
        0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

pub fn demod_ft(fringe: &Image, params: &FtParams) -> Result<PhasorField> {
    let (w, h) = (fringe.width(), fringe.height());
    let f = params.carrier_freq;
    let band_x = params.band_x.unwrap_or(f / 2.0);
    let band_y = params
        .band_y
        .unwrap_or(band_x * h as f64 / w as f64);
    let edge = params.edge_width;

    if !(f > 0.0) || !(band_x > 0.0) || !(band_y > 0.0) {
        return Err(Error::validation(
            "carrier frequency and band widths must be positive",
        ));
    }
    // a band that touches DC cannot separate the +1 order from the
    // background lobe; that is a parameter choice, not a bad input
    if f - band_x < 1.0 {
        return Err(Error::config(format!(
            "band [{:.1}, {:.1}] reaches the DC lobe",
            f - band_x,
            f + band_x
        )));
    }
    if f + band_x > w as f64 / 2.0 || band_y > h as f64 / 2.0 {
        return Err(Error::validation("band exceeds the Nyquist bin"));
    }
    if edge < 0.0 || edge > band_x.min(band_y) {
        return Err(Error::validation(
            "edge width must be in [0, min(band_x, band_y)]",
        ));
    }

    let fft = Fft2::new(w, h);
    let mut spec = fft.forward(&to_complex(fringe));
    for ky in 0..h {
        let dy = signed_bin(ky, h) as f64;
        let wy = edge_weight(dy.abs(), band_y, edge);
        for kx in 0..w {
            let dx = signed_bin(kx, w) as f64 - f;
            let weight = wy * edge_weight(dx.abs(), band_x, edge);
            let v = *spec.at(kx, ky);
            spec.set(kx, ky, v * weight);
        }
    }
    let z = fft.inverse(&spec);

    PhasorField::new(
        Image::from_fn(w, h, |x, y| z.at(x, y).im),
        Image::from_fn(w, h, |x, y| z.at(x, y).re),
        0.5,
    )
}
