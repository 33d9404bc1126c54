//! Scene geometry: parametric object surfaces added on top of a linear
//! carrier, plus the reflectance fields that turn geometry into intensity.
//!
//! A scene is expressed in projector coordinates: the absolute phase at
//! carrier frequency `f` (fringes across the width `W`) is
//!
//! `Phi(x, y) = 2 pi f x / W + phi_obj(x, y)`
//!
//! where `phi_obj` is the object-induced phase at that same frequency.
//! Re-projecting at another frequency scales the whole map by `f' / f`,
//! which is what two-frequency temporal unwrapping relies on.

use crate::field::{Grid, Image, Mask, PhaseField};
use crate::synth::poly::PolyField;
use std::f64::consts::PI;

/// A single object surface, in pixel units, contributing phase in radians
/// at the scene carrier frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    /// Smooth Gaussian bump (signed amplitude).
    Bump {
        cx: f64,
        cy: f64,
        sigma: f64,
        amplitude: f64,
    },
    /// Raised-cosine dome: `a cos^2(pi r / (2 R))` inside radius `R`,
    /// zero outside. C1 everywhere.
    Dome {
        cx: f64,
        cy: f64,
        radius: f64,
        amplitude: f64,
    },
    /// Flat disk of constant height with a sharp edge.
    Plateau {
        cx: f64,
        cy: f64,
        radius: f64,
        height: f64,
    },
    /// Half-plane step: `height` where `nx (x - cx) + ny (y - cy) > 0`.
    Step {
        cx: f64,
        cy: f64,
        nx: f64,
        ny: f64,
        height: f64,
    },
}

impl Surface {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Surface::Bump {
                cx,
                cy,
                sigma,
                amplitude,
            } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
            }
            Surface::Dome {
                cx,
                cy,
                radius,
                amplitude,
            } => {
                let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                if r < radius {
                    let c = (PI * r / (2.0 * radius)).cos();
                    amplitude * c * c
                } else {
                    0.0
                }
            }
            Surface::Plateau {
                cx,
                cy,
                radius,
                height,
            } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                if r2 < radius * radius {
                    height
                } else {
                    0.0
                }
            }
            Surface::Step { cx, cy, nx, ny, height } => {
                if nx * (x - cx) + ny * (y - cy) > 0.0 {
                    height
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether (x, y) lies on the object footprint. Drives the modulation
    /// floor of isolated scenes.
    pub fn support(&self, x: f64, y: f64) -> bool {
        match *self {
            Surface::Bump { cx, cy, sigma, .. } => {
                (x - cx).powi(2) + (y - cy).powi(2) < (3.0 * sigma).powi(2)
            }
            Surface::Dome { cx, cy, radius, .. } | Surface::Plateau { cx, cy, radius, .. } => {
                (x - cx).powi(2) + (y - cy).powi(2) < radius * radius
            }
            Surface::Step { .. } => true,
        }
    }

    /// Discontinuous surfaces break any band-limited slope analysis, so
    /// the slope cap in scene generation skips them.
    pub fn is_smooth(&self) -> bool {
        matches!(self, Surface::Bump { .. } | Surface::Dome { .. })
    }

    pub fn scale_amplitude(&mut self, k: f64) {
        match self {
            Surface::Bump { amplitude, .. } | Surface::Dome { amplitude, .. } => *amplitude *= k,
            Surface::Plateau { height, .. } | Surface::Step { height, .. } => *height *= k,
        }
    }
}

/// Full description of a synthetic measurement scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Carrier frequency in fringes across the image width.
    pub carrier_freq: f64,
    pub objects: Vec<Surface>,
    /// Background intensity A, in counts.
    pub background: PolyField,
    /// Modulation amplitude B, in counts.
    pub modulation: PolyField,
    /// Factor applied to A and B outside every object footprint.
    /// 1.0 means a fully reflective scene; small values model isolated
    /// objects against a dark backdrop.
    pub floor: f64,
}

impl SceneSpec {
    pub fn object_phase(&self, x: f64, y: f64) -> f64 {
        self.objects.iter().map(|s| s.eval(x, y)).sum()
    }

    /// Absolute phase at the scene's own carrier frequency.
    pub fn phase_total(&self) -> PhaseField {
        self.phase_at_freq(self.carrier_freq)
    }

    /// Absolute phase re-projected at frequency `freq`.
    pub fn phase_at_freq(&self, freq: f64) -> PhaseField {
        let w = self.width as f64;
        let rel = freq / self.carrier_freq;
        let values = Grid::from_fn(self.width, self.height, |x, y| {
            let carrier = 2.0 * PI * freq * x as f64 / w;
            carrier + rel * self.object_phase(x as f64, y as f64)
        });
        PhaseField::unwrapped(values)
    }

    /// Union of all object footprints.
    pub fn support_mask(&self) -> Mask {
        Mask::from_fn(self.width, self.height, |x, y| {
            self.objects
                .iter()
                .any(|s| s.support(x as f64, y as f64))
        })
    }

    /// Background and effective modulation in counts, with the isolation
    /// floor applied outside object footprints.
    pub fn reflectance(&self) -> (Image, Image) {
        let support = self.support_mask();
        let a = self.background.render(self.width, self.height);
        let b = self.modulation.render(self.width, self.height);
        let factor = |x: usize, y: usize| {
            if *support.at(x, y) {
                1.0
            } else {
                self.floor
            }
        };
        let a = Image::from_fn(self.width, self.height, |x, y| a.at(x, y) * factor(x, y));
        let b = Image::from_fn(self.width, self.height, |x, y| b.at(x, y) * factor(x, y));
        (a, b)
    }

    /// Largest finite-difference gradient magnitude of the smooth part of
    /// the object phase, in rad/px. Used to keep scenes resolvable.
    pub fn max_smooth_slope(&self) -> f64 {
        let smooth: Vec<&Surface> = self.objects.iter().filter(|s| s.is_smooth()).collect();
        if smooth.is_empty() {
            return 0.0;
        }
        let eval = |x: f64, y: f64| -> f64 { smooth.iter().map(|s| s.eval(x, y)).sum() };
        let mut worst = 0.0f64;
        for y in 0..self.height {
            for x in 0..self.width {
                let (xf, yf) = (x as f64, y as f64);
                let gx = eval(xf + 0.5, yf) - eval(xf - 0.5, yf);
                let gy = eval(xf, yf + 0.5) - eval(xf, yf - 0.5);
                worst = worst.max((gx * gx + gy * gy).sqrt());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_spec(objects: Vec<Surface>) -> SceneSpec {
        SceneSpec {
            width: 64,
            height: 64,
            carrier_freq: 16.0,
            objects,
            background: PolyField::constant(110.0),
            modulation: PolyField::constant(90.0),
            floor: 1.0,
        }
    }

    #[test]
    fn carrier_phase_is_linear_in_x() {
        let spec = flat_spec(vec![]);
        let phase = spec.phase_total();
        let w = spec.width as f64;
        for x in 0..spec.width {
            let want = 2.0 * PI * 16.0 * x as f64 / w;
            assert!((phase.values.at(x, 10) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_scales_with_frequency() {
        let spec = flat_spec(vec![Surface::Bump {
            cx: 32.0,
            cy: 32.0,
            sigma: 8.0,
            amplitude: 5.0,
        }]);
        let hi = spec.phase_total();
        let lo = spec.phase_at_freq(1.0);
        for (h, l) in hi.values.data().iter().zip(lo.values.data()) {
            assert!((h / 16.0 - l).abs() < 1e-9);
        }
    }

    #[test]
    fn dome_is_zero_outside_and_peak_at_center() {
        let d = Surface::Dome {
            cx: 0.0,
            cy: 0.0,
            radius: 10.0,
            amplitude: 4.0,
        };
        assert_eq!(d.eval(0.0, 0.0), 4.0);
        assert_eq!(d.eval(10.0, 0.0), 0.0);
        assert_eq!(d.eval(15.0, 3.0), 0.0);
        // C1 at the rim: value just inside is tiny
        assert!(d.eval(9.99, 0.0) < 1e-3);
    }

    #[test]
    fn plateau_step_heights() {
        let p = Surface::Plateau {
            cx: 5.0,
            cy: 5.0,
            radius: 3.0,
            height: 6.0,
        };
        assert_eq!(p.eval(5.0, 5.0), 6.0);
        assert_eq!(p.eval(9.0, 5.0), 0.0);

        let s = Surface::Step {
            cx: 0.0,
            cy: 0.0,
            nx: 1.0,
            ny: 0.0,
            height: 2.5,
        };
        assert_eq!(s.eval(1.0, 7.0), 2.5);
        assert_eq!(s.eval(-1.0, 7.0), 0.0);
    }

    #[test]
    fn isolation_floor_scales_reflectance_outside_support() {
        let mut spec = flat_spec(vec![Surface::Plateau {
            cx: 32.0,
            cy: 32.0,
            radius: 10.0,
            height: 3.0,
        }]);
        spec.floor = 0.05;
        let (a, b) = spec.reflectance();
        assert!((a.at(32, 32) - 110.0).abs() < 1e-12);
        assert!((b.at(32, 32) - 90.0).abs() < 1e-12);
        assert!((a.at(2, 2) - 5.5).abs() < 1e-12);
        assert!((b.at(2, 2) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn bump_slope_matches_closed_form() {
        // max |grad| of a*exp(-r^2/2s^2) is a/s * exp(-1/2) at r = s
        let spec = flat_spec(vec![Surface::Bump {
            cx: 32.0,
            cy: 32.0,
            sigma: 8.0,
            amplitude: 6.0,
        }]);
        let want = 6.0 / 8.0 * (-0.5f64).exp();
        let got = spec.max_smooth_slope();
        assert!(
            (got - want).abs() < 0.01,
            "slope {got} vs analytic {want}"
        );
    }
}
