//! Idealized phase-to-height conversion.
//!
//! A calibrated triangulation rig maps phase to height through lens and
//! geometry parameters; here a proportional model stands in for it, exact
//! and invertible on synthetic data: z = height_per_rad * (phase - reference)
//! with a uniform lateral scale. Metrology tests close the loop through the
//! inverse map, so no physical calibration enters the numbers.

use crate::error::{Error, Result};
use crate::field::{Mask, PhaseField};

/// One 3-D sample in millimetres.
pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightModel {
    /// Millimetres per pixel, both axes.
    pub lateral_scale: f64,
    /// Millimetres of height per radian of phase above the reference plane.
    pub height_per_rad: f64,
}

impl Default for HeightModel {
    fn default() -> Self {
        HeightModel {
            lateral_scale: 1.2,
            height_per_rad: 1.0,
        }
    }
}

impl HeightModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lateral_scale > 0.0) || !self.lateral_scale.is_finite() {
            return Err(Error::config("lateral scale must be positive and finite"));
        }
        if self.height_per_rad == 0.0 || !self.height_per_rad.is_finite() {
            return Err(Error::config("height per radian must be nonzero and finite"));
        }
        Ok(())
    }
}

/// Converts an unwrapped phase map into a point cloud over the masked
/// pixels. Both maps must be unwrapped: a wrapped input would fold height
/// by whole fringes and is rejected.
pub fn phase_to_height(
    phase: &PhaseField,
    reference: &PhaseField,
    model: &HeightModel,
    mask: &Mask,
) -> Result<Vec<Point3>> {
    model.validate()?;
    if phase.wrapped || reference.wrapped {
        return Err(Error::validation(
            "phase-to-height needs unwrapped maps; unwrap first",
        ));
    }
    if !phase.values.same_dims(&reference.values) || !mask.same_dims(&phase.values) {
        return Err(Error::validation(
            "phase, reference, and mask dimensions must match",
        ));
    }
    let s = model.lateral_scale;
    let k = model.height_per_rad;
    let mut points = Vec::with_capacity(mask.count());
    for y in 0..phase.height() {
        for x in 0..phase.width() {
            if *mask.at(x, y) {
                let dz = phase.values.at(x, y) - reference.values.at(x, y);
                points.push([s * x as f64, s * y as f64, k * dz]);
            }
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn unwrapped(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> PhaseField {
        PhaseField::unwrapped(Grid::from_fn(w, h, f))
    }

    fn full_mask(w: usize, h: usize) -> Mask {
        Mask::from_fn(w, h, |_, _| true)
    }

    #[test]
    fn reference_plane_maps_to_zero_height() {
        let phi = unwrapped(8, 8, |x, _| 0.7 * x as f64);
        let pts =
            phase_to_height(&phi, &phi, &HeightModel::default(), &full_mask(8, 8)).unwrap();
        assert_eq!(pts.len(), 64);
        assert!(pts.iter().all(|p| p[2] == 0.0));
    }

    #[test]
    fn linear_map_scales_as_stated() {
        let model = HeightModel {
            lateral_scale: 1.0,
            height_per_rad: 0.1,
        };
        let reference = unwrapped(4, 4, |_, _| 0.0);
        let phi = unwrapped(4, 4, |_, _| 10.0);
        let pts = phase_to_height(&phi, &reference, &model, &full_mask(4, 4)).unwrap();
        assert!(pts.iter().all(|p| (p[2] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn sphere_phase_round_trips_to_the_sphere() {
        // build the phase from the inverse map, convert back, compare
        let model = HeightModel::default();
        let (w, h) = (32, 32);
        let (r, cx, cy) = (18.0, 19.2, 19.2);
        let height = |x: usize, y: usize| -> f64 {
            let dx = model.lateral_scale * x as f64 - cx;
            let dy = model.lateral_scale * y as f64 - cy;
            let q = r * r - dx * dx - dy * dy;
            if q > 0.0 {
                q.sqrt()
            } else {
                0.0
            }
        };
        let reference = unwrapped(w, h, |x, _| 1.5 * x as f64);
        let phi = unwrapped(w, h, |x, y| {
            1.5 * x as f64 + height(x, y) / model.height_per_rad
        });
        let pts = phase_to_height(&phi, &reference, &model, &full_mask(w, h)).unwrap();
        for p in &pts {
            let x = (p[0] / model.lateral_scale).round() as usize;
            let y = (p[1] / model.lateral_scale).round() as usize;
            assert!((p[2] - height(x, y)).abs() <= 1e-9, "at ({x},{y})");
        }
    }

    #[test]
    fn wrapped_inputs_are_rejected() {
        let wrapped = PhaseField::wrapped(Grid::new(4, 4, 0.0));
        let reference = unwrapped(4, 4, |_, _| 0.0);
        assert!(matches!(
            phase_to_height(&wrapped, &reference, &HeightModel::default(), &full_mask(4, 4)),
            Err(Error::Validation(_))
        ));
    }
}
