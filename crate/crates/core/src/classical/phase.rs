//! From phasor to phase: the four-quadrant arctangent every demodulation
//! route funnels through, and the modulation-based validity mask.

use crate::field::{Mask, PhaseField, PhasorField};

/// `phi = atan2(M, D)`, wrapped into `(-pi, pi]`.
///
/// Invariant under any positive common rescale of (M, D), so the scale
/// constant `c` cancels here; it only matters for modulation estimates.
pub fn phase_from_phasor(p: &PhasorField) -> PhaseField {
    let values = crate::field::Grid::from_fn(p.width(), p.height(), |x, y| {
        let v = p.numerator.at(x, y).atan2(*p.denominator.at(x, y));
        // atan2 returns [-pi, pi]; fold the closed lower end onto +pi
        if v == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            v
        }
    });
    PhaseField::wrapped(values)
}

/// Pixels whose recovered modulation `sqrt(M^2 + D^2) / c` reaches
/// `threshold` (in intensity counts). Everything else carries no fringe
/// signal worth trusting.
pub fn modulation_mask(p: &PhasorField, threshold: f64) -> Mask {
    let c = p.scale_c;
    Mask::from_fn(p.width(), p.height(), |x, y| {
        let m = *p.numerator.at(x, y);
        let d = *p.denominator.at(x, y);
        (m * m + d * d).sqrt() / c >= threshold
    })
}
