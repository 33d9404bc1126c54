//! 2-D grid types shared across the pipeline: intensity images, phase maps,
//! phasor (numerator/denominator) pairs, and boolean masks.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Row-major 2-D grid. `data[y * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Grid {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::validation(format!(
                "grid data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Real-valued intensity or error map.
pub type Image = Grid<f64>;

/// Boolean pixel mask.
pub type Mask = Grid<bool>;

impl Image {
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &Mask) -> Mask {
        assert!(self.same_dims(other), "mask dimension mismatch");
        Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    /// Clears a `margin`-pixel border.
    pub fn with_margin(&self, margin: usize) -> Mask {
        Grid::from_fn(self.width, self.height, |x, y| {
            *self.at(x, y)
                && x >= margin
                && y >= margin
                && x + margin < self.width
                && y + margin < self.height
        })
    }
}

/// Wraps a phase value into `(-pi, pi]`.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// H x W phase map in radians, tagged wrapped or unwrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub values: Grid<f64>,
    pub wrapped: bool,
}

impl PhaseField {
    pub fn wrapped(values: Grid<f64>) -> Self {
        PhaseField {
            values,
            wrapped: true,
        }
    }

    pub fn unwrapped(values: Grid<f64>) -> Self {
        PhaseField {
            values,
            wrapped: false,
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// Checks the wrapped-range invariant: every value in `(-pi, pi]`.
    pub fn check_wrapped_range(&self) -> Result<()> {
        if !self.wrapped {
            return Err(Error::validation("phase field is not tagged wrapped"));
        }
        for &v in self.values.data() {
            if !(v > -PI && v <= PI) {
                return Err(Error::validation(format!(
                    "wrapped phase value {v} outside (-pi, pi]"
                )));
            }
        }
        Ok(())
    }
}

/// Numerator/denominator pair of the arctangent, with the
/// algorithm-dependent scale constant `c` (N/2 for N-step phase shifting,
/// 0.5 for Fourier-based single-frame methods).
#[derive(Debug, Clone)]
pub struct PhasorField {
    pub numerator: Image,
    pub denominator: Image,
    pub scale_c: f64,
}

impl PhasorField {
    pub fn new(numerator: Image, denominator: Image, scale_c: f64) -> Result<Self> {
        if !numerator.same_dims(&denominator) {
            return Err(Error::validation(
                "phasor numerator/denominator dimension mismatch",
            ));
        }
        if !(scale_c > 0.0) {
            return Err(Error::validation(format!(
                "phasor scale constant must be positive, got {scale_c}"
            )));
        }
        Ok(PhasorField {
            numerator,
            denominator,
            scale_c,
        })
    }

    pub fn width(&self) -> usize {
        self.numerator.width()
    }

    pub fn height(&self) -> usize {
        self.numerator.height()
    }

    /// Recovered modulation amplitude `sqrt(M^2 + D^2) / c`.
    pub fn modulation(&self) -> Image {
        let c = self.scale_c;
        Grid {
            width: self.numerator.width(),
            height: self.numerator.height(),
            data: self
                .numerator
                .data()
                .iter()
                .zip(self.denominator.data())
                .map(|(&m, &d)| (m * m + d * d).sqrt() / c)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range_and_identity() {
        for i in -1000..=1000 {
            let x = i as f64 * 0.037;
            let w = wrap_phase(x);
            assert!(w > -PI && w <= PI, "wrap({x}) = {w} out of range");
            // difference is a multiple of 2*pi
            let k = (x - w) / TAU;
            assert!((k - k.round()).abs() < 1e-9, "wrap({x}) not congruent");
        }
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert_eq!(wrap_phase(0.0), 0.0);
        assert_eq!(wrap_phase(TAU), 0.0);
    }

    #[test]
    fn grid_indexing_row_major() {
        let g = Grid::from_fn(3, 2, |x, y| (10 * y + x) as f64);
        assert_eq!(*g.at(0, 0), 0.0);
        assert_eq!(*g.at(2, 0), 2.0);
        assert_eq!(*g.at(0, 1), 10.0);
        assert_eq!(g.data(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn mask_margin() {
        let m = Mask::new(5, 5, true).with_margin(2);
        assert_eq!(m.count(), 1);
        assert!(*m.at(2, 2));
    }

    #[test]
    fn grid_from_vec_rejects_bad_length() {
        assert!(Grid::from_vec(3, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn phasor_requires_positive_scale() {
        let img = Image::new(2, 2, 0.0);
        assert!(PhasorField::new(img.clone(), img.clone(), 0.0).is_err());
        assert!(PhasorField::new(img.clone(), img, 6.0).is_ok());
    }
}
