//! N-step phase shifting: the reference demodulator.
//!
//! With shifts `delta_n = 2 pi n / N` and frames
//! `I_n = A + B cos(Phi - delta_n)`:
//!
//! - `M = sum_n I_n sin(delta_n) = (N/2) B sin(Phi)`
//! - `D = sum_n I_n cos(delta_n) = (N/2) B cos(Phi)`
//! - `A = mean_n I_n`
//!
//! so `c = N/2` and the phase follows from `atan2(M, D)` alone. On clean
//! frames this is exact to rounding for every N >= 3.

use crate::error::{Error, Result};
use crate::field::{Image, PhasorField};
use std::f64::consts::PI;

fn check_stack(frames: &[Image]) -> Result<()> {
    if frames.len() < 3 {
        return Err(Error::validation(format!(
            "phase shifting needs at least 3 frames, got {}",
            frames.len()
        )));
    }
    let first = &frames[0];
    if frames.iter().any(|f| !f.same_dims(first)) {
        return Err(Error::validation("fringe frames differ in size"));
    }
    Ok(())
}

/// Least-squares N-step demodulation. Returns the phasor (M, D) with
/// `c = N/2`.
pub fn demod_ps(frames: &[Image]) -> Result<PhasorField> {
    check_stack(frames)?;
    let n = frames.len();
    let (w, h) = (frames[0].width(), frames[0].height());

    let mut num = vec![0.0f64; w * h];
    let mut den = vec![0.0f64; w * h];
    for (i, frame) in frames.iter().enumerate() {
        let delta = 2.0 * PI * i as f64 / n as f64;
        let (s, c) = delta.sin_cos();
        for (j, &v) in frame.data().iter().enumerate() {
            num[j] += v * s;
            den[j] += v * c;
        }
    }

    PhasorField::new(
        Image::from_vec(w, h, num)?,
        Image::from_vec(w, h, den)?,
        n as f64 / 2.0,
    )
}

/// Background intensity estimate: the per-pixel mean over the stack.
pub fn background_ps(frames: &[Image]) -> Result<Image> {
    check_stack(frames)?;
    let (w, h) = (frames[0].width(), frames[0].height());
    let inv_n = 1.0 / frames.len() as f64;
    let mut acc = vec![0.0f64; w * h];
    for frame in frames {
        for (a, &v) in acc.iter_mut().zip(frame.data()) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a *= inv_n;
    }
    Image::from_vec(w, h, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::phase::phase_from_phasor;
    use crate::field::wrap_phase;
    use crate::synth::{random_scene, synth_stack, SceneKind};

    #[test]
    fn exact_on_clean_stacks() {
        for &n in &[3usize, 4, 12] {
            let spec = random_scene(48, 40, 12.0, 8, SceneKind::Mixed, 5 + n as u64);
            let stack = synth_stack(&spec, n).unwrap();
            let phasor = demod_ps(&stack.frames).unwrap();
            assert_eq!(phasor.scale_c, n as f64 / 2.0);

            let phi = phase_from_phasor(&phasor);
            let bg = background_ps(&stack.frames).unwrap();
            for y in 0..40 {
                for x in 0..48 {
                    let want = wrap_phase(*stack.truth.phase.values.at(x, y));
                    let got = *phi.values.at(x, y);
                    let diff = wrap_phase(got - want).abs();
                    assert!(diff < 1e-10, "N={n}: phase off by {diff}");
                    assert!((bg.at(x, y) - stack.truth.background.at(x, y)).abs() < 1e-10);
                    // recovered modulation equals B
                    let m = phasor.modulation();
                    assert!((m.at(x, y) - stack.truth.modulation.at(x, y)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn matches_closed_form_coefficients() {
        // hand-built single pixel: A=100, B=50, Phi=0.7, N=4
        let (a, b, phi) = (100.0, 50.0, 0.7f64);
        let frames: Vec<Image> = (0..4)
            .map(|i| {
                let delta = 2.0 * PI * i as f64 / 4.0;
                Image::new(1, 1, a + b * (phi - delta).cos())
            })
            .collect();
        let p = demod_ps(&frames).unwrap();
        assert!((p.numerator.at(0, 0) - 2.0 * b * phi.sin()).abs() < 1e-12);
        assert!((p.denominator.at(0, 0) - 2.0 * b * phi.cos()).abs() < 1e-12);
        assert!((background_ps(&frames).unwrap().at(0, 0) - a).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_stacks() {
        let a = Image::new(4, 4, 0.0);
        assert!(demod_ps(&[a.clone(), a.clone()]).is_err());
        let b = Image::new(5, 4, 0.0);
        assert!(demod_ps(&[a.clone(), a.clone(), b]).is_err());
        assert!(background_ps(&[a.clone()]).is_err());
    }
}
