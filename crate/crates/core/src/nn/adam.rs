//! Adam with bias correction, applied over a layer's parameter traversal.
//!
//! Moment buffers are matched to parameters by traversal index, so the same
//! layer object (or one with an identical parameter layout) must be passed
//! to every step. Updates are elementwise and order-independent, hence
//! deterministic.

use super::layers::Layer;
use super::tensor::{fs, Scalar};
use crate::error::{Error, Result};

pub struct Adam<T: Scalar> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: u64,
    moments: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate: fs(learning_rate),
            beta1: fs(0.9),
            beta2: fs(0.999),
            epsilon: fs(1e-8),
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter of `layer`, consuming the gradients
    /// accumulated by its backward passes. Missing gradient buffers count
    /// as zero.
    pub fn step(&mut self, layer: &mut dyn Layer<T>) -> Result<()> {
        self.step += 1;
        let t = self.step;
        let (lr, b1, b2, eps) = (self.learning_rate, self.beta1, self.beta2, self.epsilon);
        // bias corrections computed in f64: beta^t underflows gracefully
        let bc1 = fs::<T>(1.0 - self.beta1.to_f64().unwrap().powi(t as i32));
        let bc2 = fs::<T>(1.0 - self.beta2.to_f64().unwrap().powi(t as i32));

        let moments = &mut self.moments;
        let mut idx = 0usize;
        let mut bad: Option<String> = None;
        layer.visit_params(&mut |name, p| {
            if idx == moments.len() {
                moments.push((vec![T::zero(); p.len()], vec![T::zero(); p.len()]));
            }
            let Some((m, v)) = moments.get_mut(idx) else {
                bad = Some(format!("parameter {name} beyond optimizer state"));
                return;
            };
            if m.len() != p.len() {
                bad = Some(format!(
                    "parameter {name} changed size: {} vs state {}",
                    p.len(),
                    m.len()
                ));
                return;
            }
            let (values, grad) = p.value_and_grad();
            for (k, val) in values.iter_mut().enumerate() {
                let g = grad.map_or(T::zero(), |g| g[k]);
                m[k] = b1 * m[k] + (T::one() - b1) * g;
                v[k] = b2 * v[k] + (T::one() - b2) * g * g;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                *val = *val - lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
        if let Some(msg) = bad {
            return Err(Error::validation(msg));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::Conv2d;
    use crate::nn::tensor::Tensor;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// One bare scalar parameter; forward passes input through untouched.
    struct ScalarParam {
        p: Tensor<f64>,
    }

    impl Layer<f64> for ScalarParam {
        fn forward(&mut self, x: &Tensor<f64>) -> crate::error::Result<Tensor<f64>> {
            Ok(x.clone())
        }
        fn backward(&mut self, gy: &Tensor<f64>) -> crate::error::Result<Tensor<f64>> {
            Ok(gy.clone())
        }
        fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
            f("p", &mut self.p);
        }
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        let mut layer = ScalarParam {
            p: Tensor::from_vec([1, 1, 1, 1], vec![0.7]).unwrap(),
        };
        layer.p.grad_mut()[0] = 1.0;
        let mut opt = Adam::new(0.1);
        opt.step(&mut layer).unwrap();
        // bias correction makes the very first step a full -lr regardless
        // of gradient magnitude's square
        assert!((layer.p.data()[0] - (0.7 - 0.1)).abs() < 1e-8);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut layer = ScalarParam {
            p: Tensor::from_vec([1, 1, 1, 1], vec![0.3]).unwrap(),
        };
        let mut opt = Adam::new(0.05);
        for _ in 0..10 {
            layer.zero_grads();
            opt.step(&mut layer).unwrap();
        }
        assert_eq!(layer.p.data()[0], 0.3);
    }

    #[test]
    fn hundred_steps_are_bit_reproducible() {
        let run = || {
            let mut rng = StdRng::seed_from_u64(31);
            let mut conv = Conv2d::<f64>::new(&mut rng, 1, 2, 3, 1, 1).unwrap();
            let mut opt = Adam::new(1e-3);
            for step in 0..100u64 {
                // synthetic deterministic gradients standing in for backprop
                conv.visit_params(&mut |_, t| {
                    let g = t.grad_mut();
                    for (k, gv) in g.iter_mut().enumerate() {
                        *gv = ((step as f64 + 1.0) * 0.01).sin() * (k as f64 + 1.0).recip();
                    }
                });
                opt.step(&mut conv).unwrap();
            }
            let mut out = Vec::new();
            conv.visit_params(&mut |_, t| out.extend_from_slice(t.data()));
            out
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gradient_descends_a_quadratic() {
        // minimize (p - 3)^2 via its gradient; Adam should converge
        let mut layer = ScalarParam {
            p: Tensor::from_vec([1, 1, 1, 1], vec![0.0]).unwrap(),
        };
        let mut opt = Adam::new(0.1);
        for _ in 0..400 {
            let p = layer.p.data()[0];
            layer.p.grad_mut()[0] = 2.0 * (p - 3.0);
            opt.step(&mut layer).unwrap();
        }
        assert!((layer.p.data()[0] - 3.0).abs() < 1e-3);
    }
}
