//! Two-frequency temporal phase unwrapping.
//!
//! A coarse map that is already absolute predicts, after scaling by the
//! frequency ratio, where the fine wrapped map must sit; rounding the
//! difference to whole fringes recovers the order pixel by pixel. No
//! spatial propagation is involved, so discontinuous scenes cost nothing.

use crate::error::{Error, Result};
use crate::field::{Grid, Mask, PhaseField};
use std::f64::consts::TAU;

/// The two wrapped measurements feeding one unwrap.
///
/// `phase_low` must be absolute already. At `f_low = 1` a single fringe
/// covers the field, so its wrapped map is absolute up to branch choice and
/// is lifted to [0, 2pi) internally; for any other `f_low` the caller has
/// to supply an unwrapped map (from a previous stage of a cascade).
///
/// The lift only works when the true low-frequency phase itself stays
/// inside one fringe, absolute value in [0, 2pi). A scene whose object
/// phase pushes past that at the field edge is ambiguous at f_low = 1 by
/// construction, and no algorithm can recover it from these two maps.
#[derive(Debug, Clone)]
pub struct FrequencyPair {
    pub f_high: f64,
    pub f_low: f64,
    pub phase_high: PhaseField,
    pub phase_low: PhaseField,
}

/// Result of an unwrap: the absolute fine phase, the integer fringe count
/// that was added per pixel, and a data-quality note when rounding was
/// borderline on too many pixels.
#[derive(Debug, Clone)]
pub struct Unwrapped {
    pub phase: PhaseField,
    pub order: Grid<f64>,
    pub warning: Option<String>,
}

/// How close to half a fringe the rounding residual may come before a
/// pixel counts as borderline, and how many borderline pixels the map may
/// carry before the result gets flagged.
const RESIDUAL_LIMIT: f64 = 0.49 * TAU;
const BORDERLINE_SHARE: f64 = 0.01;

pub fn temporal_unwrap(pair: &FrequencyPair, mask: Option<&Mask>) -> Result<Unwrapped> {
    if !(pair.f_low >= 1.0 && pair.f_high > pair.f_low) {
        return Err(Error::validation(format!(
            "need f_high > f_low >= 1, got f_high {} f_low {}",
            pair.f_high, pair.f_low
        )));
    }
    if !pair
        .phase_high
        .values
        .same_dims(&pair.phase_low.values)
    {
        return Err(Error::validation(format!(
            "phase maps {}x{} and {}x{} must match",
            pair.phase_high.width(),
            pair.phase_high.height(),
            pair.phase_low.width(),
            pair.phase_low.height()
        )));
    }
    if let Some(m) = mask {
        if !m.same_dims(&pair.phase_high.values) {
            return Err(Error::validation("mask dimensions must match the phase maps"));
        }
    }

    let ratio = pair.f_high / pair.f_low;
    let lift_low = pair.f_low == 1.0;
    let (w, h) = (pair.phase_high.width(), pair.phase_high.height());

    let mut order = Grid::new(w, h, 0.0f64);
    let mut values = Grid::new(w, h, 0.0f64);
    let mut borderline = 0usize;
    let mut counted = 0usize;
    for y in 0..h {
        for x in 0..w {
            let fine = *pair.phase_high.values.at(x, y);
            let mut coarse = *pair.phase_low.values.at(x, y);
            if lift_low && coarse < 0.0 {
                coarse += TAU;
            }
            let predicted = coarse * ratio;
            let k = ((predicted - fine) / TAU).round();
            order.set(x, y, k);
            values.set(x, y, fine + TAU * k);

            if mask.map_or(true, |m| *m.at(x, y)) {
                counted += 1;
                if (predicted - fine - TAU * k).abs() > RESIDUAL_LIMIT {
                    borderline += 1;
                }
            }
        }
    }

    let warning = (counted > 0 && borderline as f64 > BORDERLINE_SHARE * counted as f64).then(
        || {
            format!(
                "fringe-order rounding was borderline (residual > {RESIDUAL_LIMIT:.3} rad) \
                 on {borderline} of {counted} pixels"
            )
        },
    );

    Ok(Unwrapped {
        phase: PhaseField::unwrapped(values),
        order,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::wrap_phase;
    use crate::synth::poly::PolyField;
    use crate::synth::scene::{SceneSpec, Surface};

    fn wrapped_of(field: &PhaseField) -> PhaseField {
        PhaseField::wrapped(field.values.map(|&v| wrap_phase(v)))
    }

    fn carrier_pair(w: usize, h: usize, f_high: f64) -> (FrequencyPair, PhaseField) {
        let spec = SceneSpec {
            width: w,
            height: h,
            carrier_freq: f_high,
            objects: vec![],
            background: PolyField::constant(110.0),
            modulation: PolyField::constant(85.0),
            floor: 1.0,
        };
        let truth = spec.phase_at_freq(f_high);
        let pair = FrequencyPair {
            f_high,
            f_low: 1.0,
            phase_high: wrapped_of(&truth),
            phase_low: wrapped_of(&spec.phase_at_freq(1.0)),
        };
        (pair, truth)
    }

    #[test]
    fn noiseless_carrier_unwraps_exactly() {
        let (pair, truth) = carrier_pair(64, 16, 16.0);
        let out = temporal_unwrap(&pair, None).unwrap();
        assert!(out.warning.is_none());
        for (a, b) in out.phase.values.data().iter().zip(truth.values.data()) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_fields_stay_zero() {
        let zero = PhaseField::wrapped(Grid::new(8, 8, 0.0));
        let pair = FrequencyPair {
            f_high: 8.0,
            f_low: 1.0,
            phase_high: zero.clone(),
            phase_low: zero,
        };
        let out = temporal_unwrap(&pair, None).unwrap();
        assert!(out.phase.values.data().iter().all(|&v| v == 0.0));
        assert!(out.order.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_scene_unwraps_without_residual_jumps() {
        // the step drops by 8 rad so the unit-frequency absolute phase
        // stays inside [0, 2pi) out to the right edge
        let spec = SceneSpec {
            width: 96,
            height: 48,
            carrier_freq: 24.0,
            objects: vec![Surface::Step {
                cx: 48.0,
                cy: 24.0,
                nx: 1.0,
                ny: 0.3,
                height: -8.0,
            }],
            background: PolyField::constant(110.0),
            modulation: PolyField::constant(85.0),
            floor: 1.0,
        };
        let truth = spec.phase_at_freq(spec.carrier_freq);
        let pair = FrequencyPair {
            f_high: spec.carrier_freq,
            f_low: 1.0,
            phase_high: wrapped_of(&truth),
            phase_low: wrapped_of(&spec.phase_at_freq(1.0)),
        };
        let out = temporal_unwrap(&pair, None).unwrap();
        assert!(out.warning.is_none());
        for (a, b) in out.phase.values.data().iter().zip(truth.values.data()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn wrap_of_unwrap_returns_the_fine_map() {
        let (pair, _) = carrier_pair(80, 20, 20.0);
        let out = temporal_unwrap(&pair, None).unwrap();
        for (u, f) in out
            .phase
            .values
            .data()
            .iter()
            .zip(pair.phase_high.values.data())
        {
            // equal up to the +-pi branch representative
            let w = wrap_phase(*u);
            assert!(
                (w - f).abs() <= 1e-9 || (TAU - (w - f).abs()) <= 1e-9,
                "{w} vs {f}"
            );
        }
    }

    #[test]
    fn order_is_integral_and_bounded_on_clean_data() {
        let (pair, _) = carrier_pair(64, 16, 16.0);
        let out = temporal_unwrap(&pair, None).unwrap();
        for &k in out.order.data() {
            assert_eq!(k, k.round());
            assert!((0.0..=16.0).contains(&k), "order {k} outside [0, f_high]");
        }
    }

    #[test]
    fn borderline_rounding_raises_a_warning() {
        // a low map corrupted by half a fringe makes every rounding residual
        // land near pi, which must flag the result
        let (mut pair, _) = carrier_pair(32, 8, 8.0);
        pair.phase_low = PhaseField::wrapped(
            pair.phase_low
                .values
                .map(|&v| wrap_phase(v + PI / pair.f_high)),
        );
        let out = temporal_unwrap(&pair, None).unwrap();
        assert!(out.warning.is_some());
    }

    #[test]
    fn bad_frequencies_are_rejected() {
        let zero = PhaseField::wrapped(Grid::new(4, 4, 0.0));
        let pair = FrequencyPair {
            f_high: 1.0,
            f_low: 4.0,
            phase_high: zero.clone(),
            phase_low: zero,
        };
        assert!(matches!(
            temporal_unwrap(&pair, None),
            Err(Error::Validation(_))
        ));
    }
}
