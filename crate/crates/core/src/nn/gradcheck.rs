//! Central-difference verification of layer gradients.
//!
//! For a layer f and a fixed random projection c, the scalar probe
//! `L(x, params) = sum(c * f(x))` has analytic gradients delivered by
//! `backward(c)`. Every input and parameter coordinate is perturbed by
//! +-1e-6 in f64, where central differences carry ~1e-10 noise, far below
//! the 1e-4 acceptance bar.

use super::layers::Layer;
use super::tensor::Tensor;
use rand::rngs::StdRng;
use rand::Rng;

pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct GradReport {
    /// Worst relative error across all checked coordinates.
    pub max_rel: f64,
    /// Number of coordinates checked (input + parameters).
    pub checked: usize,
}

impl GradReport {
    pub fn passes(&self) -> bool {
        self.max_rel <= TOLERANCE
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2)
}

fn probe_loss(layer: &mut dyn Layer<f64>, x: &Tensor<f64>, c: &Tensor<f64>) -> f64 {
    let y = layer.forward(x).expect("gradcheck forward");
    y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum()
}

fn add_to_param(layer: &mut dyn Layer<f64>, param: usize, coord: usize, delta: f64) {
    let mut idx = 0;
    layer.visit_params(&mut |_, t| {
        if idx == param {
            t.data_mut()[coord] += delta;
        }
        idx += 1;
    });
}

/// Checks d(sum(c * f(x)))/d(input and params) against central differences.
/// The projection c is drawn away from zero so no output is silently
/// excluded.
pub fn check_layer(layer: &mut dyn Layer<f64>, x: &Tensor<f64>, rng: &mut StdRng) -> GradReport {
    let y = layer.forward(x).expect("gradcheck forward");
    let c = Tensor::from_fn(y.dims(), |_, _, _, _| {
        let mag = rng.random_range(0.5..1.5);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    });

    layer.zero_grads();
    let _ = layer.forward(x).expect("gradcheck forward");
    let gx = layer.backward(&c).expect("gradcheck backward");
    let mut param_grads: Vec<Vec<f64>> = Vec::new();
    layer.visit_params(&mut |_, t| {
        param_grads.push(t.grad().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; t.len()]));
    });

    let mut max_rel = 0.0f64;
    let mut checked = 0usize;

    let mut xp = x.clone();
    for k in 0..x.len() {
        xp.data_mut()[k] += STEP;
        let lp = probe_loss(layer, &xp, &c);
        xp.data_mut()[k] -= 2.0 * STEP;
        let lm = probe_loss(layer, &xp, &c);
        xp.data_mut()[k] = x.data()[k];
        max_rel = max_rel.max(rel_err(gx.data()[k], (lp - lm) / (2.0 * STEP)));
        checked += 1;
    }

    for (pi, grads) in param_grads.iter().enumerate() {
        for k in 0..grads.len() {
            add_to_param(layer, pi, k, STEP);
            let lp = probe_loss(layer, x, &c);
            add_to_param(layer, pi, k, -2.0 * STEP);
            let lm = probe_loss(layer, x, &c);
            add_to_param(layer, pi, k, STEP);
            max_rel = max_rel.max(rel_err(grads[k], (lp - lm) / (2.0 * STEP)));
            checked += 1;
        }
    }

    GradReport { max_rel, checked }
}
