//! Unitary 2-D DFT on top of rustfft, plus the bin/frequency helpers the
//! Fourier demodulators share.
//!
//! Both directions scale by `1/sqrt(W*H)`, so `idft2(dft2(x)) == x` and
//! energy is preserved exactly.

use crate::field::{Grid, Image};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub type CGrid = Grid<Complex<f64>>;

/// Signed bin index: bins above n/2 alias to negative frequencies.
#[inline]
pub fn signed_bin(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequency of bin `k` on an `n`-point grid, rad/px.
#[inline]
pub fn omega(k: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * signed_bin(k, n) as f64 / n as f64
}

/// Planned 2-D FFT for a fixed size. Reuse one instance when transforming
/// many same-sized grids; planning dominates for small images.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty fft grid");
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn transform_slice(&self, data: &mut [Complex<f64>], forward: bool) {
        let (w, h) = (self.width, self.height);
        assert_eq!(data.len(), w * h, "fft buffer size mismatch");

        let row_fft = if forward { &self.row_fwd } else { &self.row_inv };
        for row in data.chunks_exact_mut(w) {
            row_fft.process(row);
        }

        let col_fft = if forward { &self.col_fwd } else { &self.col_inv };
        let mut col = vec![Complex::default(); h];
        for x in 0..w {
            for y in 0..h {
                col[y] = data[y * w + x];
            }
            col_fft.process(&mut col);
            for y in 0..h {
                data[y * w + x] = col[y];
            }
        }

        let norm = 1.0 / ((w * h) as f64).sqrt();
        for v in data {
            *v *= norm;
        }
    }

    /// In-place unitary forward transform of a row-major `w*h` buffer.
    pub fn forward_slice(&self, data: &mut [Complex<f64>]) {
        self.transform_slice(data, true);
    }

    /// In-place unitary inverse transform.
    pub fn inverse_slice(&self, data: &mut [Complex<f64>]) {
        self.transform_slice(data, false);
    }

    fn transform(&self, input: &CGrid, forward: bool) -> CGrid {
        assert_eq!(input.width(), self.width, "fft width mismatch");
        assert_eq!(input.height(), self.height, "fft height mismatch");
        let mut data = input.data().to_vec();
        self.transform_slice(&mut data, forward);
        Grid::from_vec(self.width, self.height, data).expect("dims preserved")
    }

    pub fn forward(&self, input: &CGrid) -> CGrid {
        self.transform(input, true)
    }

    pub fn inverse(&self, input: &CGrid) -> CGrid {
        self.transform(input, false)
    }
}

pub fn dft2(input: &CGrid) -> CGrid {
    Fft2::new(input.width(), input.height()).forward(input)
}

pub fn idft2(input: &CGrid) -> CGrid {
    Fft2::new(input.width(), input.height()).inverse(input)
}

pub fn to_complex(img: &Image) -> CGrid {
    img.map(|&v| Complex::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_grid(w: usize, h: usize, seed: u64) -> CGrid {
        let mut rng = StdRng::seed_from_u64(seed);
        Grid::from_fn(w, h, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// O(n^4) reference DFT, same unitary convention.
    fn naive_dft2(input: &CGrid) -> CGrid {
        let (w, h) = (input.width(), input.height());
        let norm = 1.0 / ((w * h) as f64).sqrt();
        Grid::from_fn(w, h, |kx, ky| {
            let mut acc = Complex::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let ang = -2.0 * std::f64::consts::PI
                        * (kx as f64 * x as f64 / w as f64 + ky as f64 * y as f64 / h as f64);
                    acc += input.at(x, y) * Complex::from_polar(1.0, ang);
                }
            }
            acc * norm
        })
    }

    #[test]
    fn matches_naive_dft() {
        for &(w, h) in &[(4usize, 4usize), (5, 3), (8, 6), (7, 7)] {
            let g = random_grid(w, h, 11 + w as u64);
            let fast = dft2(&g);
            let slow = naive_dft2(&g);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).norm() < 1e-10, "{w}x{h}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut g = CGrid::new(8, 8, Complex::new(0.0, 0.0));
        g.set(0, 0, Complex::new(1.0, 0.0));
        let spec = dft2(&g);
        for v in spec.data() {
            assert!((v - Complex::new(0.125, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn pure_tone_lands_on_its_bin() {
        let (w, h, f) = (32, 16, 5);
        let g = Grid::from_fn(w, h, |x, _| {
            Complex::new(
                (2.0 * std::f64::consts::PI * f as f64 * x as f64 / w as f64).cos(),
                0.0,
            )
        });
        let spec = dft2(&g);
        // energy only at bins (±f, 0), each sqrt(W*H)/2
        let want = (w as f64 * h as f64).sqrt() / 2.0;
        assert!((spec.at(f, 0).norm() - want).abs() < 1e-9);
        assert!((spec.at(w - f, 0).norm() - want).abs() < 1e-9);
        assert!(spec.at(f + 1, 0).norm() < 1e-9);
        assert!(spec.at(f, 1).norm() < 1e-9);
    }

    #[test]
    fn signed_bins() {
        assert_eq!(signed_bin(0, 8), 0);
        assert_eq!(signed_bin(4, 8), 4);
        assert_eq!(signed_bin(5, 8), -3);
        assert_eq!(signed_bin(7, 8), -1);
        assert!((omega(1, 8) - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert!((omega(7, 8) + std::f64::consts::PI / 4.0).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn roundtrip_and_parseval(w in 2usize..24, h in 2usize..24, seed in 0u64..1000) {
            let g = random_grid(w, h, seed);
            let spec = dft2(&g);
            let back = idft2(&spec);

            let energy_in: f64 = g.data().iter().map(|v| v.norm_sqr()).sum();
            let energy_spec: f64 = spec.data().iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((energy_in - energy_spec).abs() < 1e-9 * energy_in.max(1.0));

            for (a, b) in g.data().iter().zip(back.data()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
