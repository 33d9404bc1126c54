//! Masked phase-error statistics.

use crate::error::{Error, Result};
use crate::field::{wrap_phase, Grid, Image, Mask, PhaseField};

/// Pixels this close to the border never enter error statistics; the
/// zero-padded convolutions and windowed transforms are untrustworthy there.
pub const EVAL_MARGIN: usize = 4;

/// Error statistics of one method on one scene, over `mask` minus the
/// evaluation margin. `error_map` holds the absolute per-pixel error, zero
/// outside the counted region.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub method: String,
    pub mae: f64,
    pub rmse: f64,
    pub max_abs: f64,
    pub masked_pixels: usize,
    pub error_map: Image,
}

/// Compares two phase maps of the same representation. Wrapped inputs are
/// compared through the wrapped difference, so a 2pi offset is no error;
/// unwrapped inputs are compared directly.
pub fn phase_error(
    method: &str,
    pred: &PhaseField,
    gt: &PhaseField,
    mask: &Mask,
) -> Result<ErrorReport> {
    if !pred.values.same_dims(&gt.values) {
        return Err(Error::validation(format!(
            "phase maps {}x{} and {}x{} must match",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if !mask.same_dims(&pred.values) {
        return Err(Error::validation("mask dimensions must match the phase maps"));
    }
    if pred.wrapped != gt.wrapped {
        return Err(Error::validation(
            "cannot compare a wrapped map with an unwrapped one",
        ));
    }

    let counted = mask.with_margin(EVAL_MARGIN);
    let wrapped = pred.wrapped;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut n = 0usize;
    let error_map = Grid::from_fn(pred.width(), pred.height(), |x, y| {
        if !*counted.at(x, y) {
            return 0.0;
        }
        let d = pred.values.at(x, y) - gt.values.at(x, y);
        let e = if wrapped { wrap_phase(d).abs() } else { d.abs() };
        sum += e;
        sum_sq += e * e;
        max_abs = max_abs.max(e);
        n += 1;
        e
    });
    if n == 0 {
        return Err(Error::validation(
            "no pixels survive the mask and evaluation margin",
        ));
    }

    Ok(ErrorReport {
        method: method.to_string(),
        mae: sum / n as f64,
        rmse: (sum_sq / n as f64).sqrt(),
        max_abs,
        masked_pixels: n,
        error_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> PhaseField {
        PhaseField::wrapped(Grid::from_fn(w, h, f))
    }

    fn full_mask(w: usize, h: usize) -> Mask {
        Mask::from_fn(w, h, |_, _| true)
    }

    #[test]
    fn identical_maps_have_zero_error() {
        let a = field(16, 16, |x, y| wrap_phase(0.3 * x as f64 - 0.1 * y as f64));
        let r = phase_error("ps", &a, &a, &full_mask(16, 16)).unwrap();
        assert_eq!(r.mae, 0.0);
        assert_eq!(r.rmse, 0.0);
        assert_eq!(r.max_abs, 0.0);
        assert_eq!(r.masked_pixels, 8 * 8);
    }

    #[test]
    fn constant_offset_reads_back_exactly() {
        let a = field(16, 16, |_, _| 0.2);
        let b = field(16, 16, |_, _| 0.2 + PI / 2.0);
        let r = phase_error("ft", &b, &a, &full_mask(16, 16)).unwrap();
        assert!((r.mae - PI / 2.0).abs() < 1e-12);
        assert!((r.rmse - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_difference_ignores_branch_jumps() {
        // pred and gt sit on opposite sides of the branch cut but are
        // only 0.2 rad apart on the circle
        let a = field(12, 12, |_, _| PI - 0.1);
        let b = field(12, 12, |_, _| -PI + 0.1);
        let r = phase_error("wft", &a, &b, &full_mask(12, 12)).unwrap();
        assert!((r.mae - 0.2).abs() < 1e-12);
    }

    #[test]
    fn error_is_symmetric_in_the_arguments() {
        let a = field(16, 12, |x, _| wrap_phase(0.4 * x as f64));
        let b = field(16, 12, |x, y| wrap_phase(0.4 * x as f64 + 0.01 * y as f64));
        let ab = phase_error("m", &a, &b, &full_mask(16, 12)).unwrap();
        let ba = phase_error("m", &b, &a, &full_mask(16, 12)).unwrap();
        assert_eq!(ab.mae, ba.mae);
        assert_eq!(ab.rmse, ba.rmse);
    }

    #[test]
    fn margin_and_mask_pixels_are_excluded_exactly() {
        let a = field(20, 20, |_, _| 0.0);
        let mut b = PhaseField::wrapped(Grid::new(20, 20, 0.0));
        // plant a large error inside the margin band; it must not count
        b.values.set(1, 1, 3.0);
        // and one in the interior that must
        b.values.set(10, 10, 0.5);
        let mut mask = full_mask(20, 20);
        mask.set(11, 10, false);
        let r = phase_error("m", &b, &a, &mask).unwrap();
        assert_eq!(r.masked_pixels, 12 * 12 - 1);
        assert_eq!(r.max_abs, 0.5);
        assert_eq!(*r.error_map.at(1, 1), 0.0);
        assert_eq!(*r.error_map.at(10, 10), 0.5);
    }

    #[test]
    fn mixed_representations_and_empty_masks_are_rejected() {
        let a = field(12, 12, |_, _| 0.0);
        let u = PhaseField::unwrapped(Grid::new(12, 12, 0.0));
        assert!(matches!(
            phase_error("m", &a, &u, &full_mask(12, 12)),
            Err(Error::Validation(_))
        ));
        let empty = Mask::from_fn(12, 12, |_, _| false);
        assert!(matches!(
            phase_error("m", &a, &a, &empty),
            Err(Error::Validation(_))
        ));
    }
}
