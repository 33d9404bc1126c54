//! The two-sphere metrology scene: a closed synthetic loop from sphere
//! geometry through fringe rendering, demodulation, unwrapping, and sphere
//! fitting back to millimetres.
//!
//! Geometry mirrors a calibrated ceramic-sphere pair: radii 25.398 mm and
//! 25.403 mm with 100.688 mm between centers. Each sphere shows a cap whose
//! lateral extent is `cap_fraction` of its radius, sitting tangent on the
//! z = 0 reference plane, so the height field is continuous.

use crate::classical::demod_ps;
use crate::error::{Error, Result};
use crate::eval::height::{phase_to_height, HeightModel, Point3};
use crate::eval::sphere::{fit_sphere, SphereFit};
use crate::field::{Grid, Image, Mask, PhaseField};
use crate::synth::dataset::derive_seed;
use crate::synth::render::{degrade, fringe_frame};
use crate::unwrap::{temporal_unwrap, FrequencyPair};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSphereScene {
    pub width: usize,
    pub height: usize,
    /// Fringes across the width for the fine measurement.
    pub carrier_freq: f64,
    pub model: HeightModel,
    /// True radii in mm.
    pub radius_left: f64,
    pub radius_right: f64,
    /// True center-to-center distance in mm (both centers share y and z).
    pub center_distance: f64,
    /// Lateral cap extent as a fraction of each radius. Larger caps show
    /// steeper phase at the rim; 0.6 keeps the rim slope inside what the
    /// single-frame methods resolve.
    pub cap_fraction: f64,
    /// Share of the cap radius whose pixels feed the sphere fit, trimming
    /// the shallow-angle rim.
    pub fit_fraction: f64,
    /// Constant background and modulation, counts.
    pub background: f64,
    pub modulation: f64,
}

impl Default for TwoSphereScene {
    fn default() -> Self {
        TwoSphereScene {
            width: 128,
            height: 128,
            carrier_freq: 32.0,
            model: HeightModel::default(),
            radius_left: 25.398,
            radius_right: 25.403,
            center_distance: 100.688,
            cap_fraction: 0.6,
            fit_fraction: 0.8,
            background: 110.0,
            modulation: 85.0,
        }
    }
}

/// Everything a demodulation method needs plus the ground truth to close
/// the loop.
#[derive(Debug, Clone)]
pub struct TwoSphereData {
    pub scene: TwoSphereScene,
    /// Degraded N-step stack at the carrier frequency.
    pub high_frames: Vec<Image>,
    /// Degraded N-step stack at unit frequency, the unwrapping anchor.
    pub low_frames: Vec<Image>,
    /// Absolute phase at the carrier frequency, noise-free.
    pub truth_high: PhaseField,
    /// Carrier-only ramp at the carrier frequency: the z = 0 plane.
    pub reference_high: PhaseField,
    pub left_mask: Mask,
    pub right_mask: Mask,
    /// Height field in mm.
    pub height_gt: Image,
}

/// Result of one closed metrology loop.
#[derive(Debug, Clone)]
pub struct MetrologyReport {
    pub left: SphereFit,
    pub right: SphereFit,
    /// Fitted center-to-center distance, mm.
    pub center_distance: f64,
    /// Fitted minus true, mm.
    pub radius_error_left: f64,
    pub radius_error_right: f64,
    pub distance_error: f64,
    pub unwrap_warning: Option<String>,
}

impl TwoSphereScene {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.width < 32 || self.height < 32 {
            return Err(Error::config("metrology scene needs at least 32x32 pixels"));
        }
        if !(self.cap_fraction > 0.0 && self.cap_fraction < 1.0)
            || !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0)
        {
            return Err(Error::config(
                "cap and fit fractions must lie in (0, 1) and (0, 1]",
            ));
        }
        if self.radius_left <= 0.0 || self.radius_right <= 0.0 || self.center_distance <= 0.0 {
            return Err(Error::config("sphere geometry must be positive"));
        }
        let span = self.model.lateral_scale * self.width as f64;
        let reach = self.center_distance
            + self.cap_fraction * (self.radius_left + self.radius_right);
        if reach >= span {
            return Err(Error::config(format!(
                "spheres spanning {reach:.1} mm do not fit the {span:.1} mm field"
            )));
        }
        Ok(())
    }

    /// Sphere centers in mm; both sit on the image's horizontal midline.
    pub fn centers(&self) -> (Point3, Point3) {
        let s = self.model.lateral_scale;
        let mid_x = s * self.width as f64 / 2.0;
        let mid_y = s * self.height as f64 / 2.0;
        let half = self.center_distance / 2.0;
        // the cap rim touches z = 0, so the center sits below the plane
        let zc = |r: f64| -r * (1.0 - self.cap_fraction * self.cap_fraction).sqrt();
        (
            [mid_x - half, mid_y, zc(self.radius_left)],
            [mid_x + half, mid_y, zc(self.radius_right)],
        )
    }

    fn cap_height(&self, center: &Point3, r: f64, x_mm: f64, y_mm: f64) -> f64 {
        let rho2 = (x_mm - center[0]).powi(2) + (y_mm - center[1]).powi(2);
        let max_rho = self.cap_fraction * r;
        if rho2 >= max_rho * max_rho {
            return 0.0;
        }
        center[2] + (r * r - rho2).sqrt()
    }

    /// Height above the reference plane in mm.
    pub fn height_map(&self) -> Image {
        let (left, right) = self.centers();
        let s = self.model.lateral_scale;
        Grid::from_fn(self.width, self.height, |x, y| {
            let (xm, ym) = (s * x as f64, s * y as f64);
            self.cap_height(&left, self.radius_left, xm, ym)
                + self.cap_height(&right, self.radius_right, xm, ym)
        })
    }

    /// Absolute phase at `freq` fringes per width: carrier ramp plus the
    /// height-induced term, which scales with frequency like any object
    /// phase does.
    pub fn truth_phase(&self, freq: f64) -> PhaseField {
        let h = self.height_map();
        let w = self.width as f64;
        let rel = freq / self.carrier_freq;
        let k = self.model.height_per_rad;
        let values = Grid::from_fn(self.width, self.height, |x, y| {
            2.0 * PI * freq * x as f64 / w + rel * h.at(x, y) / k
        });
        PhaseField::unwrapped(values)
    }

    /// Carrier-only ramp at `freq`: the phase of the bare reference plane.
    pub fn reference_phase(&self, freq: f64) -> PhaseField {
        let w = self.width as f64;
        let values = Grid::from_fn(self.width, self.height, |x, _| {
            2.0 * PI * freq * x as f64 / w
        });
        PhaseField::unwrapped(values)
    }

    /// Per-sphere fit masks: pixels within `fit_fraction` of each cap's
    /// lateral radius.
    pub fn fit_masks(&self) -> (Mask, Mask) {
        let (left, right) = self.centers();
        let s = self.model.lateral_scale;
        let mask_of = |c: Point3, r: f64| {
            let rho_max = self.fit_fraction * self.cap_fraction * r;
            Mask::from_fn(self.width, self.height, |x, y| {
                let (xm, ym) = (s * x as f64, s * y as f64);
                (xm - c[0]).powi(2) + (ym - c[1]).powi(2) < rho_max * rho_max
            })
        };
        (
            mask_of(left, self.radius_left),
            mask_of(right, self.radius_right),
        )
    }

    /// Renders the degraded stacks at the carrier and at unit frequency.
    pub fn render(
        &self,
        frames: usize,
        noise_sigma: f64,
        bits: u32,
        seed: u64,
    ) -> Result<TwoSphereData> {
        self.render_inner(frames, Some((noise_sigma, bits, seed)))
    }

    /// Renders analytic stacks with no noise and no quantization, for
    /// closed-loop exactness checks of the downstream pipeline.
    pub fn render_exact(&self, frames: usize) -> Result<TwoSphereData> {
        self.render_inner(frames, None)
    }

    fn render_inner(
        &self,
        frames: usize,
        degradation: Option<(f64, u32, u64)>,
    ) -> Result<TwoSphereData> {
        self.validate()?;
        if frames < 3 {
            return Err(Error::validation(format!(
                "phase shifting needs at least 3 frames, got {frames}"
            )));
        }
        let a = Grid::new(self.width, self.height, self.background);
        let b = Grid::new(self.width, self.height, self.modulation);
        let truth_high = self.truth_phase(self.carrier_freq);
        let truth_low = self.truth_phase(1.0);

        let render_stack = |truth: &PhaseField, stream: u64| -> Result<Vec<Image>> {
            (0..frames)
                .map(|i| {
                    let clean = fringe_frame(truth, &a, &b, 2.0 * PI * i as f64 / frames as f64);
                    match degradation {
                        Some((sigma, bits, seed)) => {
                            degrade(&clean, sigma, bits, derive_seed(seed, stream + i as u64))
                        }
                        None => Ok(clean),
                    }
                })
                .collect()
        };
        let high_frames = render_stack(&truth_high, 2000)?;
        let low_frames = render_stack(&truth_low, 3000)?;
        let (left_mask, right_mask) = self.fit_masks();

        Ok(TwoSphereData {
            scene: *self,
            high_frames,
            low_frames,
            truth_high,
            reference_high: self.reference_phase(self.carrier_freq),
            left_mask,
            right_mask,
            height_gt: self.height_map(),
        })
    }
}

/// Closes the loop from two wrapped phase maps (fine and unit-frequency) to
/// fitted spheres. The caller picks the demodulator that produced them.
pub fn sphere_metrology(
    data: &TwoSphereData,
    wrapped_high: &PhaseField,
    wrapped_low: &PhaseField,
) -> Result<MetrologyReport> {
    let scene = &data.scene;
    let pair = FrequencyPair {
        f_high: scene.carrier_freq,
        f_low: 1.0,
        phase_high: wrapped_high.clone(),
        phase_low: wrapped_low.clone(),
    };
    // the rounding-quality check should watch the pixels the fits will use
    let union = Mask::from_fn(scene.width, scene.height, |x, y| {
        *data.left_mask.at(x, y) || *data.right_mask.at(x, y)
    });
    let unwrapped = temporal_unwrap(&pair, Some(&union))?;

    let fit_one = |mask: &Mask| -> Result<SphereFit> {
        let points = phase_to_height(&unwrapped.phase, &data.reference_high, &scene.model, mask)?;
        fit_sphere(&points)
    };
    let left = fit_one(&data.left_mask)?;
    let right = fit_one(&data.right_mask)?;

    let d = ((left.center[0] - right.center[0]).powi(2)
        + (left.center[1] - right.center[1]).powi(2)
        + (left.center[2] - right.center[2]).powi(2))
    .sqrt();

    Ok(MetrologyReport {
        left,
        right,
        center_distance: d,
        radius_error_left: left.radius - scene.radius_left,
        radius_error_right: right.radius - scene.radius_right,
        distance_error: d - scene.center_distance,
        unwrap_warning: unwrapped.warning,
    })
}

/// The reference pipeline: N-step phase shifting on both stacks.
pub fn metrology_ps(data: &TwoSphereData) -> Result<MetrologyReport> {
    let high = crate::classical::phase_from_phasor(&demod_ps(&data.high_frames)?);
    let low = crate::classical::phase_from_phasor(&demod_ps(&data.low_frames)?);
    sphere_metrology(data, &high, &low)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_consistent() {
        let scene = TwoSphereScene::default();
        scene.validate().unwrap();
        let (l, r) = scene.centers();
        let d = ((l[0] - r[0]).powi(2) + (l[1] - r[1]).powi(2) + (l[2] - r[2]).powi(2)).sqrt();
        // centers share y; z differs only through the radii, micrometres
        assert!((d - scene.center_distance).abs() < 1e-6);
        let h = scene.height_map();
        let (lo, hi) = h.min_max();
        assert_eq!(lo, 0.0);
        // peak cap height r (1 - sqrt(1 - q^2))
        let expect = scene.radius_right * (1.0 - (1.0 - 0.36f64).sqrt());
        assert!((hi - expect).abs() < 1e-2, "{hi} vs {expect}");
    }

    #[test]
    fn unit_frequency_phase_fits_one_fringe() {
        let scene = TwoSphereScene::default();
        let low = scene.truth_phase(1.0);
        let (lo, hi) = low.values.min_max();
        assert!(lo >= 0.0);
        assert!(hi < 2.0 * PI, "low-frequency phase {hi} exceeds one fringe");
    }

    #[test]
    fn noiseless_ps_loop_recovers_the_geometry() {
        let scene = TwoSphereScene::default();
        let data = scene.render(12, 0.0, 8, 77).unwrap();
        let report = metrology_ps(&data).unwrap();
        assert!(report.unwrap_warning.is_none());
        // only 8-bit rounding separates this from exact: micrometre scale
        assert!(
            report.radius_error_left.abs() <= 0.01,
            "left radius error {} mm",
            report.radius_error_left
        );
        assert!(report.radius_error_right.abs() <= 0.01);
        assert!(report.distance_error.abs() <= 0.01);
        assert!(report.left.rms_residual <= 0.01);
    }

    #[test]
    fn exact_render_closes_the_loop_to_nanometres() {
        let scene = TwoSphereScene::default();
        let data = scene.render_exact(12).unwrap();
        let report = metrology_ps(&data).unwrap();
        assert!(report.unwrap_warning.is_none());
        // analytic frames: the whole chain is rounding-limited
        assert!(
            report.radius_error_left.abs() <= 1e-6,
            "left radius error {} mm",
            report.radius_error_left
        );
        assert!(report.radius_error_right.abs() <= 1e-6);
        assert!(report.distance_error.abs() <= 1e-6);
    }

    #[test]
    fn masks_do_not_overlap_and_stay_inside() {
        let scene = TwoSphereScene::default();
        let (l, r) = scene.fit_masks();
        assert_eq!(l.and(&r).count(), 0);
        assert!(l.count() > 100);
        // nothing within the evaluation border
        let border = l
            .and(&Mask::from_fn(scene.width, scene.height, |x, y| {
                x < 4 || y < 4 || x >= scene.width - 4 || y >= scene.height - 4
            }))
            .count();
        assert_eq!(border, 0);
    }

    #[test]
    fn oversized_geometry_is_rejected() {
        let scene = TwoSphereScene {
            center_distance: 160.0,
            ..TwoSphereScene::default()
        };
        assert!(matches!(scene.validate(), Err(Error::Config(_))));
    }
}
