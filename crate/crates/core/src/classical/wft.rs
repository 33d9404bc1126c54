//! Windowed-Fourier filtering demodulation.
//!
//! For each local frequency (xi, eta) on a grid around the carrier, the
//! windowed spectrum is
//!
//! `S(x, y; xi, eta) = sum_{u,v} f(u, v) g(u-x, v-y) exp(-i[xi (u-x) + eta (v-y)])`
//!
//! with `g` an L1-normalized Gaussian of width `sigma`. Coefficients whose
//! magnitude stays below a threshold are discarded as noise; the survivors
//! are re-windowed and accumulated into the filtered analytic signal
//!
//! `z = (step^2 sigma^2 / pi) * sum_{xi,eta} (S~ conv k)`,
//!
//! normalized so a clean in-band tone `B cos` comes back as `(B/2) e^{i Phi}`.
//!
//! Everything runs through FFTs: `g` never materializes in the spatial
//! domain because its transform is the analytic Gaussian
//! `G(w) = exp(-sigma^2 (w - xi)^2 / 2)` per axis. The image is embedded in
//! a zero pad of `4 sigma` per side so the circular convolutions behave
//! like linear ones.

use crate::classical::fft::{omega, CGrid, Fft2};
use crate::error::{Error, Result};
use crate::field::{Grid, Image, PhasorField};
use num_complex::Complex;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct WftParams {
    /// Gaussian window sigma, pixels.
    pub window_sigma: f64,
    /// Lower edge of the xi scan, rad/px. Must stay clear of DC.
    pub freq_lo_x: f64,
    /// Upper edge of the xi scan, rad/px.
    pub freq_hi_x: f64,
    /// Lower edge of the eta scan, rad/px.
    pub freq_lo_y: f64,
    /// Upper edge of the eta scan, rad/px.
    pub freq_hi_y: f64,
    /// Frequency grid step, rad/px.
    pub freq_step: f64,
    /// Coefficient magnitude threshold, intensity counts.
    pub threshold: f64,
}

/// Spatial carrier frequency in rad/px for `carrier_freq` fringes across a
/// `width`-pixel image.
pub fn carrier_omega(carrier_freq: f64, width: usize) -> f64 {
    2.0 * PI * carrier_freq / width as f64
}

impl WftParams {
    /// Conservative defaults: wide 10 px window, scan of +-0.6 rad/px about
    /// the carrier, fine 0.025 rad/px step.
    pub fn around_carrier(omega0: f64) -> Self {
        WftParams {
            window_sigma: 10.0,
            freq_lo_x: omega0 - 0.6,
            freq_hi_x: omega0 + 0.6,
            freq_lo_y: -0.6,
            freq_hi_y: 0.6,
            freq_step: 0.025,
            threshold: 6.0,
        }
    }

    /// Tuning for small, steep scenes: a tighter 4 px window tracks faster
    /// phase variation, paid for with a wider scan (+-0.75 rad/px) and a
    /// coarser step to keep the frequency grid comparable in size.
    pub fn tuned(omega0: f64) -> Self {
        WftParams {
            window_sigma: 4.0,
            freq_lo_x: omega0 - 0.75,
            freq_hi_x: omega0 + 0.75,
            freq_lo_y: -0.75,
            freq_hi_y: 0.75,
            freq_step: 0.05,
            threshold: 6.0,
        }
    }
}

/// Next integer >= n with no prime factor above 7, to keep FFT sizes fast.
fn next_smooth(mut n: usize) -> usize {
    loop {
        let mut m = n.max(1);
        for p in [2usize, 3, 5, 7] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Inclusive scan `lo, lo + step, ...` up to `hi` (within float slack).
fn freq_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || lo > hi {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 1e-9).floor() as i64;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

struct WftEngine {
    fft: Fft2,
    pad: usize,
    width: usize,
    height: usize,
    sigma: f64,
    /// Forward transform of the zero-embedded fringe.
    spectrum: Vec<Complex<f64>>,
    omega_x: Vec<f64>,
    omega_y: Vec<f64>,
}

impl WftEngine {
    fn new(fringe: &Image, sigma: f64) -> Self {
        let (w, h) = (fringe.width(), fringe.height());
        let pad = (4.0 * sigma).ceil() as usize;
        let pw = next_smooth(w + 2 * pad);
        let ph = next_smooth(h + 2 * pad);

        let mut data = vec![Complex::new(0.0, 0.0); pw * ph];
        for y in 0..h {
            for x in 0..w {
                data[(y + pad) * pw + (x + pad)] = Complex::new(*fringe.at(x, y), 0.0);
            }
        }
        let fft = Fft2::new(pw, ph);
        fft.forward_slice(&mut data);

        WftEngine {
            fft,
            pad,
            width: w,
            height: h,
            sigma,
            spectrum: data,
            omega_x: (0..pw).map(|k| omega(k, pw)).collect(),
            omega_y: (0..ph).map(|k| omega(k, ph)).collect(),
        }
    }

    // The DTFT of the sampled Gaussian is 2*pi-periodic, so the frequency
    // distance must wrap; otherwise coefficients near the band edge pick
    // up a spurious discontinuity at omega = -pi.
    fn window_x(&self, xi: f64) -> Vec<f64> {
        let s2 = self.sigma * self.sigma;
        self.omega_x
            .iter()
            .map(|&w| {
                let d = crate::field::wrap_phase(w - xi);
                (-s2 * d * d / 2.0).exp()
            })
            .collect()
    }

    fn window_y(&self, eta: f64) -> Vec<f64> {
        let s2 = self.sigma * self.sigma;
        self.omega_y
            .iter()
            .map(|&w| {
                let d = crate::field::wrap_phase(w - eta);
                (-s2 * d * d / 2.0).exp()
            })
            .collect()
    }

    /// Windowed coefficients S for one (xi, eta), on the padded grid.
    fn coefficients(&self, wx: &[f64], wy: &[f64]) -> Vec<Complex<f64>> {
        let pw = self.fft.width();
        let mut buf = self.spectrum.clone();
        for (ky, &gy) in wy.iter().enumerate() {
            let row = &mut buf[ky * pw..(ky + 1) * pw];
            for (v, &gx) in row.iter_mut().zip(wx) {
                *v *= gx * gy;
            }
        }
        self.fft.inverse_slice(&mut buf);
        buf
    }

    fn crop(&self, data: &[Complex<f64>]) -> CGrid {
        let pw = self.fft.width();
        Grid::from_fn(self.width, self.height, |x, y| {
            data[(y + self.pad) * pw + (x + self.pad)]
        })
    }
}

fn validate(fringe: &Image, p: &WftParams) -> Result<()> {
    let (w, h) = (fringe.width(), fringe.height());
    if w < 8 || h < 8 {
        return Err(Error::validation("image too small for windowed analysis"));
    }
    // sigma below 1 px makes the sampled window alias badly against its
    // analytic transform; above min/2 the window outgrows the image
    if !(p.window_sigma >= 1.0) || p.window_sigma > w.min(h) as f64 / 2.0 {
        return Err(Error::validation(format!(
            "window sigma {} outside [1, min(W,H)/2]",
            p.window_sigma
        )));
    }
    if p.threshold < 0.0 {
        return Err(Error::validation("threshold must be non-negative"));
    }
    if !(p.freq_step > 0.0)
        || !(p.freq_lo_x < p.freq_hi_x)
        || !(p.freq_lo_y < p.freq_hi_y)
    {
        return Err(Error::config(
            "empty frequency grid: need freq_lo < freq_hi per axis and freq_step > 0",
        ));
    }
    // the scan must stay clear of the background lobe at DC and of Nyquist;
    // anything else is a band choice that cannot isolate the +1 order
    if p.freq_lo_x < 3.0 / p.window_sigma {
        return Err(Error::config(format!(
            "scan low edge {:.3} rad/px too close to DC for sigma {}",
            p.freq_lo_x, p.window_sigma
        )));
    }
    if p.freq_hi_x >= PI || p.freq_hi_y >= PI || p.freq_lo_y <= -PI {
        return Err(Error::config("frequency scan reaches Nyquist"));
    }
    Ok(())
}

/// Windowed-Fourier-filtered demodulation of a single fringe pattern.
pub fn demod_wft(fringe: &Image, params: &WftParams) -> Result<PhasorField> {
    validate(fringe, params)?;
    let engine = WftEngine::new(fringe, params.window_sigma);
    let (pw, ph) = (engine.fft.width(), engine.fft.height());

    let xis = freq_grid(params.freq_lo_x, params.freq_hi_x, params.freq_step);
    let etas = freq_grid(params.freq_lo_y, params.freq_hi_y, params.freq_step);
    let wys: Vec<Vec<f64>> = etas.iter().map(|&eta| engine.window_y(eta)).collect();

    let mut acc = vec![Complex::new(0.0, 0.0); pw * ph];
    for &xi in &xis {
        let wx = engine.window_x(xi);
        for wy in &wys {
            let mut s = engine.coefficients(&wx, wy);
            for v in &mut s {
                if v.norm_sqr() < params.threshold * params.threshold {
                    *v = Complex::new(0.0, 0.0);
                }
            }
            engine.fft.forward_slice(&mut s);
            for (ky, gy) in wy.iter().enumerate() {
                let row_s = &s[ky * pw..(ky + 1) * pw];
                let row_a = &mut acc[ky * pw..(ky + 1) * pw];
                for ((a, &v), &gx) in row_a.iter_mut().zip(row_s).zip(&wx) {
                    *a += v * (gx * gy);
                }
            }
        }
    }
    engine.fft.inverse_slice(&mut acc);

    let norm = params.freq_step * params.freq_step * params.window_sigma * params.window_sigma / PI;
    let z = engine.crop(&acc);
    PhasorField::new(
        Image::from_fn(z.width(), z.height(), |x, y| z.at(x, y).im * norm),
        Image::from_fn(z.width(), z.height(), |x, y| z.at(x, y).re * norm),
        0.5,
    )
}

/// Windowed coefficients S(x, y; xi, eta) cropped to the image, mainly for
/// diagnostics and verification.
pub fn wft_coefficients(fringe: &Image, sigma: f64, xi: f64, eta: f64) -> Result<CGrid> {
    if !(sigma >= 1.0) {
        return Err(Error::validation("window sigma must be at least 1"));
    }
    let engine = WftEngine::new(fringe, sigma);
    let wx = engine.window_x(xi);
    let wy = engine.window_y(eta);
    Ok(engine.crop(&engine.coefficients(&wx, &wy)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::phase::phase_from_phasor;
    use crate::field::wrap_phase;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn tone(w: usize, h: usize, a: f64, b: f64, freq: f64) -> Image {
        Image::from_fn(w, h, |x, _| {
            a + b * (2.0 * PI * freq * x as f64 / w as f64).cos()
        })
    }

    #[test]
    fn next_smooth_values() {
        assert_eq!(next_smooth(1), 1);
        assert_eq!(next_smooth(7), 7);
        assert_eq!(next_smooth(11), 12);
        assert_eq!(next_smooth(121), 125);
        assert_eq!(next_smooth(208), 210);
    }

    #[test]
    fn freq_grid_covers_inclusive_range() {
        let g = freq_grid(1.4, 1.6, 0.025);
        assert_eq!(g.len(), 9);
        assert!((g[0] - 1.4).abs() < 1e-12);
        assert!((g[8] - 1.6).abs() < 1e-12);
        assert!((g[4] - 1.5).abs() < 1e-12);
        assert!(freq_grid(1.0, 0.5, 0.1).is_empty());
        assert!(freq_grid(0.5, 1.0, 0.0).is_empty());
    }

    /// Brute-force direct sum with an explicitly truncated spatial window,
    /// an independent route to the same coefficients.
    fn direct_coefficients(
        fringe: &Image,
        sigma: f64,
        xi: f64,
        eta: f64,
        x: usize,
        y: usize,
    ) -> Complex<f64> {
        let reach = (8.0 * sigma).ceil() as i64;
        let norm = 1.0 / (2.0 * PI * sigma * sigma);
        let mut acc = Complex::new(0.0, 0.0);
        for dv in -reach..=reach {
            for du in -reach..=reach {
                let (u, v) = (x as i64 + du, y as i64 + dv);
                if u < 0 || v < 0 || u >= fringe.width() as i64 || v >= fringe.height() as i64 {
                    continue; // zero-extended, same as the padded FFT route
                }
                let g = norm
                    * (-((du * du + dv * dv) as f64) / (2.0 * sigma * sigma)).exp();
                let ang = -(xi * du as f64 + eta * dv as f64);
                acc += fringe.at(u as usize, v as usize) * g * Complex::from_polar(1.0, ang);
            }
        }
        acc
    }

    #[test]
    fn coefficients_match_direct_window_sum() {
        let mut rng = StdRng::seed_from_u64(9);
        let img = Image::from_fn(18, 14, |x, _| {
            100.0
                + 40.0 * (1.3 * x as f64).cos()
                + rng.random_range(-2.0..2.0)
        });
        let (sigma, xi, eta) = (2.0, 1.3, 0.1);
        let s = wft_coefficients(&img, sigma, xi, eta).unwrap();
        for &(x, y) in &[(0usize, 0usize), (9, 7), (17, 13), (4, 11)] {
            let want = direct_coefficients(&img, sigma, xi, eta, x, y);
            let got = *s.at(x, y);
            assert!(
                (got - want).norm() < 1e-6 * want.norm().max(1.0),
                "({x},{y}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn tone_coefficient_peaks_at_its_frequency() {
        let img = tone(64, 32, 100.0, 45.0, 12.0); // omega0 = 1.178
        let omega0 = 2.0 * PI * 12.0 / 64.0;
        let at_peak = wft_coefficients(&img, 4.0, omega0, 0.0).unwrap();
        let off_peak = wft_coefficients(&img, 4.0, omega0 + 1.0, 0.0).unwrap();
        // center pixel: |S| = B/2 at the local frequency; 1 rad/px away
        // the Gaussian response g(1.0) = exp(-8) has killed it
        let center = at_peak.at(32, 16).norm();
        assert!((center - 22.5).abs() < 0.5, "peak magnitude {center}");
        assert!(off_peak.at(32, 16).norm() < 0.05);
        // and the coefficient phase equals the local phase
        let want = wrap_phase(omega0 * 32.0);
        let got = at_peak.at(32, 16).arg();
        assert!(wrap_phase(got - want).abs() < 1e-3);
    }

    /// Scan of `+-band` rad/px about the carrier with a 4 px window.
    fn tight_params(omega0: f64, band: f64) -> WftParams {
        WftParams {
            window_sigma: 4.0,
            freq_lo_x: omega0 - band,
            freq_hi_x: omega0 + band,
            freq_lo_y: -band,
            freq_hi_y: band,
            freq_step: 0.05,
            threshold: 6.0,
        }
    }

    #[test]
    fn pure_tone_reconstructs_half_amplitude_and_phase() {
        let (w, h, f) = (64usize, 48usize, 16.0);
        let img = tone(w, h, 100.0, 45.0, f);
        let omega0 = carrier_omega(f, w);
        let phasor = demod_wft(&img, &tight_params(omega0, 0.4)).unwrap();
        let phi = phase_from_phasor(&phasor);
        let modulation = phasor.modulation();
        let margin = 16; // 4 sigma: border leakage tails die out by here
        for y in margin..h - margin {
            for x in margin..w - margin {
                // thresholding trims the far tails of the g^2 mass: with
                // |S| >= 6 out of a 22.5 peak about 7% of the amplitude
                // goes missing. The trim is symmetric, so phase is intact.
                let m = *modulation.at(x, y);
                assert!(m > 40.0 && m < 46.0, "modulation {m} at ({x},{y})");
                let want = wrap_phase(omega0 * x as f64);
                let diff = wrap_phase(phi.values.at(x, y) - want).abs();
                assert!(diff < 5e-3, "phase off {diff} at ({x},{y})");
            }
        }
    }

    #[test]
    fn noise_only_input_is_suppressed_by_threshold() {
        let params = tight_params(carrier_omega(12.0, 48), 0.4);

        // zero-mean noise: every coefficient stays under the threshold,
        // the output is identically zero
        let mut rng = StdRng::seed_from_u64(3);
        let img = Image::from_fn(48, 48, |_, _| rng.random_range(-4.0..4.0));
        let phasor = demod_wft(&img, &params).unwrap();
        for (m, d) in phasor
            .numerator
            .data()
            .iter()
            .zip(phasor.denominator.data())
        {
            assert_eq!(*m, 0.0);
            assert_eq!(*d, 0.0);
        }

        // with a bright pedestal, the hard image border leaks broadband
        // energy past the threshold near the edges; re-windowing smears
        // Gaussian tails of that inward, so the interior is only
        // near-zero, orders of magnitude below any fringe signal
        let img = Image::from_fn(48, 48, |_, _| 100.0 + rng.random_range(-4.0..4.0));
        let phasor = demod_wft(&img, &params).unwrap();
        let margin = 16; // 4 sigma
        for y in margin..48 - margin {
            for x in margin..48 - margin {
                assert!(phasor.numerator.at(x, y).abs() < 1e-2);
                assert!(phasor.denominator.at(x, y).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn rejects_bad_scan_and_window_choices() {
        let img = tone(64, 64, 100.0, 45.0, 16.0);
        let omega0 = carrier_omega(16.0, 64); // 1.571 rad/px

        let config = |p: &WftParams| {
            matches!(demod_wft(&img, p).unwrap_err(), Error::Config(_))
        };
        let mut p = WftParams::around_carrier(omega0);
        p.freq_lo_x = 0.02; // low edge almost at DC
        assert!(config(&p));
        let mut p = WftParams::around_carrier(omega0);
        p.freq_hi_x = 3.2; // past Nyquist
        assert!(config(&p));
        let mut p = WftParams::around_carrier(omega0);
        p.freq_lo_x = p.freq_hi_x + 0.1; // empty grid
        assert!(config(&p));
        let mut p = WftParams::around_carrier(omega0);
        p.freq_step = 0.0; // empty grid
        assert!(config(&p));

        let mut p = WftParams::around_carrier(omega0);
        p.window_sigma = 0.5; // aliased window
        assert!(matches!(
            demod_wft(&img, &p).unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn default_scan_demodulates_a_tone() {
        let (w, h, f) = (64usize, 64usize, 16.0);
        let img = tone(w, h, 100.0, 45.0, f);
        let omega0 = carrier_omega(f, w);
        let phasor = demod_wft(&img, &WftParams::around_carrier(omega0)).unwrap();
        let phi = phase_from_phasor(&phasor);
        // sigma 10 pushes the reliable interior far in on a 64-px image;
        // check dead center only
        let want = wrap_phase(omega0 * 32.0);
        assert!(wrap_phase(phi.values.at(32, 32) - want).abs() < 1e-2);
    }
}
