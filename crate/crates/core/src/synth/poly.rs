//! Low-order 2-D polynomials for slowly varying background and modulation
//! fields.

use crate::field::Image;

/// Quadratic polynomial over normalized pixel-center coordinates
/// `u, v in (-0.5, 0.5)`:
///
/// `p(u, v) = c0 + c1 u + c2 v + c3 u^2 + c4 u v + c5 v^2`
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    pub coeffs: [f64; 6],
}

impl PolyField {
    pub fn constant(c: f64) -> Self {
        PolyField {
            coeffs: [c, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn new(coeffs: [f64; 6]) -> Self {
        PolyField { coeffs }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let [c0, c1, c2, c3, c4, c5] = self.coeffs;
        c0 + c1 * u + c2 * v + c3 * u * u + c4 * u * v + c5 * v * v
    }

    /// Samples the polynomial at pixel centers of a `width x height` grid.
    pub fn render(&self, width: usize, height: usize) -> Image {
        Image::from_fn(width, height, |x, y| {
            let u = (x as f64 + 0.5) / width as f64 - 0.5;
            let v = (y as f64 + 0.5) / height as f64 - 0.5;
            self.eval(u, v)
        })
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut coeffs = self.coeffs;
        for c in &mut coeffs {
            *c *= k;
        }
        PolyField { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_renders_flat() {
        let img = PolyField::constant(7.5).render(4, 3);
        assert!(img.data().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn linear_term_spans_expected_range() {
        // p = u over a 100-wide grid: edges at +-0.495
        let p = PolyField::new([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let img = p.render(100, 1);
        assert!((img.at(0, 0) - (-0.495)).abs() < 1e-12);
        assert!((img.at(99, 0) - 0.495).abs() < 1e-12);
    }

    #[test]
    fn quadratic_eval_matches_formula() {
        let p = PolyField::new([1.0, 2.0, -1.0, 0.5, 3.0, -0.25]);
        let (u, v) = (0.3, -0.2);
        let want = 1.0 + 2.0 * u - 1.0 * v + 0.5 * u * u + 3.0 * u * v - 0.25 * v * v;
        assert!((p.eval(u, v) - want).abs() < 1e-15);
    }
}
