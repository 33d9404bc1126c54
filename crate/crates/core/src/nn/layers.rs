//! Stateful layers over the functional ops: parameters, activation caches,
//! and exact backward passes.
//!
//! A layer owns its parameter tensors (gradients ride in each tensor's grad
//! buffer) and caches whatever activations its backward pass needs, so the
//! calling pattern is strictly forward-then-backward. Parameter traversal
//! order is fixed by construction and shared by the optimizer and the
//! checkpoint format.

use super::ops::{
    conv2d_bwd, conv2d_fwd, relu_bwd, relu_fwd, upsample_nearest2x_bwd, upsample_nearest2x_fwd,
};
use super::tensor::{fs, Scalar, Tensor};
use crate::error::{Error, Result};
use rand::rngs::StdRng;
use rand::Rng;

pub trait Layer<T: Scalar> {
    /// Computes the output and caches what backward will need.
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>>;
    /// Accumulates parameter gradients and returns the input gradient.
    /// Requires a preceding `forward`.
    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>>;
    /// Visits every parameter tensor in declaration order.
    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>));

    fn zero_grads(&mut self) {
        self.visit_params(&mut |_, t| t.zero_grad());
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, _| n += 1);
        n
    }
}

fn missing_cache<X>(op: &str) -> Result<X> {
    Err(Error::validation(format!(
        "{op}: backward called without a preceding forward"
    )))
}

/// Kaiming-uniform fan-in draw: U(-b, b) with b = sqrt(6 / fan_in), the
/// standard scaling for ReLU stacks. Biases start at zero.
fn kaiming_kernel<T: Scalar>(
    rng: &mut StdRng,
    out_ch: usize,
    in_ch: usize,
    k: usize,
) -> Tensor<T> {
    let fan_in = (in_ch * k * k) as f64;
    let bound = (6.0 / fan_in).sqrt();
    Tensor::from_fn([out_ch, in_ch, k, k], |_, _, _, _| {
        fs::<T>(rng.random_range(-bound..bound))
    })
}

pub struct Conv2d<T: Scalar> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
    stride: usize,
    padding: usize,
    cache_x: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    /// Odd square kernel; `padding = k/2` with stride 1 preserves H and W.
    pub fn new(
        rng: &mut StdRng,
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        if k % 2 == 0 || k == 0 {
            return Err(Error::validation(format!("conv kernel {k} must be odd")));
        }
        if in_ch == 0 || out_ch == 0 || stride == 0 {
            return Err(Error::validation("conv channels and stride must be positive"));
        }
        Ok(Conv2d {
            w: kaiming_kernel(rng, out_ch, in_ch, k),
            b: Tensor::zeros([1, out_ch, 1, 1]),
            stride,
            padding,
            cache_x: None,
        })
    }
}

impl<T: Scalar> Layer<T> for Conv2d<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = conv2d_fwd(x, &self.w, &self.b, self.stride, self.padding)?;
        self.cache_x = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        let Some(x) = self.cache_x.take() else {
            return missing_cache("conv2d");
        };
        let (gx, gw, gb) = conv2d_bwd(&x, &self.w, gy, self.stride, self.padding)?;
        for (acc, &g) in self.w.grad_mut().iter_mut().zip(gw.data()) {
            *acc = *acc + g;
        }
        for (acc, &g) in self.b.grad_mut().iter_mut().zip(gb.data()) {
            *acc = *acc + g;
        }
        Ok(gx)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        f("w", &mut self.w);
        f("b", &mut self.b);
    }
}

#[derive(Default)]
pub struct Relu<T: Scalar> {
    cache_x: Option<Tensor<T>>,
}

impl<T: Scalar> Relu<T> {
    pub fn new() -> Self {
        Relu { cache_x: None }
    }
}

impl<T: Scalar> Layer<T> for Relu<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.cache_x = Some(x.clone());
        Ok(relu_fwd(x))
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        let Some(x) = self.cache_x.take() else {
            return missing_cache("relu");
        };
        relu_bwd(&x, gy)
    }

    fn visit_params(&mut self, _f: &mut dyn FnMut(&str, &mut Tensor<T>)) {}
}

/// `y = x + conv2(relu(conv1(x)))`: identity skip around conv-ReLU-conv.
pub struct ResidualBlock<T: Scalar> {
    conv1: Conv2d<T>,
    relu: Relu<T>,
    conv2: Conv2d<T>,
}

impl<T: Scalar> ResidualBlock<T> {
    pub fn new(rng: &mut StdRng, channels: usize) -> Result<Self> {
        Ok(ResidualBlock {
            conv1: Conv2d::new(rng, channels, channels, 3, 1, 1)?,
            relu: Relu::new(),
            conv2: Conv2d::new(rng, channels, channels, 3, 1, 1)?,
        })
    }
}

impl<T: Scalar> Layer<T> for ResidualBlock<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let branch = self.conv2.forward(&self.relu.forward(&self.conv1.forward(x)?)?)?;
        let mut y = x.clone();
        for (v, &bv) in y.data_mut().iter_mut().zip(branch.data()) {
            *v = *v + bv;
        }
        Ok(y)
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        let mut gx = self
            .conv1
            .backward(&self.relu.backward(&self.conv2.backward(gy)?)?)?;
        for (g, &u) in gx.data_mut().iter_mut().zip(gy.data()) {
            *g = *g + u; // skip path
        }
        Ok(gx)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.conv1.visit_params(&mut |n, t| f(&format!("conv1.{n}"), t));
        self.conv2.visit_params(&mut |n, t| f(&format!("conv2.{n}"), t));
    }
}

/// Learned stride-2 reduction: a 3x3 conv with stride 2 on even inputs.
pub struct Downsample2x<T: Scalar> {
    conv: Conv2d<T>,
}

impl<T: Scalar> Downsample2x<T> {
    pub fn new(rng: &mut StdRng, in_ch: usize, out_ch: usize) -> Result<Self> {
        Ok(Downsample2x {
            conv: Conv2d::new(rng, in_ch, out_ch, 3, 2, 1)?,
        })
    }
}

impl<T: Scalar> Layer<T> for Downsample2x<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let [_, _, h, w] = x.dims();
        if h % 2 != 0 || w % 2 != 0 {
            return Err(Error::validation(format!(
                "downsample2x: input {h}x{w} must have even sides"
            )));
        }
        self.conv.forward(x)
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        self.conv.backward(gy)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.conv.visit_params(&mut |n, t| f(&format!("conv.{n}"), t));
    }
}

/// Nearest-neighbor 2x enlargement followed by a smoothing 3x3 conv, the
/// inverse-shape partner of `Downsample2x`.
pub struct Upsample2x<T: Scalar> {
    conv: Conv2d<T>,
}

impl<T: Scalar> Upsample2x<T> {
    pub fn new(rng: &mut StdRng, in_ch: usize, out_ch: usize) -> Result<Self> {
        Ok(Upsample2x {
            conv: Conv2d::new(rng, in_ch, out_ch, 3, 1, 1)?,
        })
    }
}

impl<T: Scalar> Layer<T> for Upsample2x<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.conv.forward(&upsample_nearest2x_fwd(x))
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        upsample_nearest2x_bwd(&self.conv.backward(gy)?)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        self.conv.visit_params(&mut |n, t| f(&format!("conv.{n}"), t));
    }
}

/// Layers applied in order; backward runs them in reverse.
pub struct Sequential<T: Scalar> {
    layers: Vec<Box<dyn Layer<T>>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(layers: Vec<Box<dyn Layer<T>>>) -> Self {
        Sequential { layers }
    }

    pub fn push(&mut self, layer: Box<dyn Layer<T>>) {
        self.layers.push(layer);
    }
}

impl<T: Scalar> Layer<T> for Sequential<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    fn backward(&mut self, gy: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = gy.clone();
        for layer in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur)?;
        }
        Ok(cur)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_params(&mut |n, t| f(&format!("{i}.{n}"), t));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> StdRng {
        StdRng::seed_from_u64(17)
    }

    #[test]
    fn residual_block_is_identity_at_zero_weights() {
        let mut r = rng();
        let mut block = ResidualBlock::<f64>::new(&mut r, 3).unwrap();
        block.visit_params(&mut |_, t| {
            t.data_mut().fill(0.0);
        });
        let x = Tensor::from_fn([2, 3, 5, 5], |n, c, y, xx| (n + c + y + xx) as f64 - 6.0);
        let y = block.forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn residual_block_preserves_shape() {
        let mut r = rng();
        let mut block = ResidualBlock::<f32>::new(&mut r, 4).unwrap();
        let x = Tensor::from_fn([1, 4, 7, 9], |_, _, _, _| 0.25f32);
        assert_eq!(block.forward(&x).unwrap().dims(), [1, 4, 7, 9]);
        let bad = Tensor::<f32>::zeros([1, 3, 7, 9]);
        assert!(block.forward(&bad).is_err());
    }

    #[test]
    fn down_up_restores_dims() {
        let mut r = rng();
        let mut down = Downsample2x::<f32>::new(&mut r, 1, 6).unwrap();
        let mut up = Upsample2x::<f32>::new(&mut r, 6, 2).unwrap();
        let x = Tensor::from_fn([1, 1, 4, 4], |_, _, y, xx| (y * 4 + xx) as f32);
        let mid = down.forward(&x).unwrap();
        assert_eq!(mid.dims(), [1, 6, 2, 2]);
        let y = up.forward(&mid).unwrap();
        assert_eq!(y.dims(), [1, 2, 4, 4]);

        let odd = Tensor::<f32>::zeros([1, 1, 5, 4]);
        assert!(down.forward(&odd).is_err());
    }

    #[test]
    fn forward_is_deterministic() {
        let x = Tensor::from_fn([1, 1, 8, 8], |_, _, y, xx| ((y * 8 + xx) as f64).sin());
        let run = || {
            let mut r = StdRng::seed_from_u64(99);
            let mut net = Sequential::new(vec![
                Box::new(Conv2d::<f64>::new(&mut r, 1, 4, 3, 1, 1).unwrap()),
                Box::new(Relu::new()),
                Box::new(ResidualBlock::new(&mut r, 4).unwrap()),
                Box::new(Conv2d::new(&mut r, 4, 1, 3, 1, 1).unwrap()),
            ]);
            net.forward(&x).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b); // bit-identical, not merely close
    }

    #[test]
    fn backward_without_forward_is_an_error() {
        let mut r = rng();
        let mut conv = Conv2d::<f64>::new(&mut r, 1, 1, 3, 1, 1).unwrap();
        assert!(conv.backward(&Tensor::zeros([1, 1, 4, 4])).is_err());
    }

    #[test]
    fn param_traversal_order_is_stable() {
        let mut r = rng();
        let mut net = Sequential::new(vec![
            Box::new(Conv2d::<f64>::new(&mut r, 1, 2, 3, 1, 1).unwrap()),
            Box::new(Relu::new()),
            Box::new(ResidualBlock::new(&mut r, 2).unwrap()),
        ]);
        let mut names = Vec::new();
        net.visit_params(&mut |n, _| names.push(n.to_string()));
        assert_eq!(
            names,
            ["0.w", "0.b", "2.conv1.w", "2.conv1.b", "2.conv2.w", "2.conv2.b"]
        );
    }

    #[test]
    fn kernels_must_be_odd() {
        let mut r = rng();
        assert!(Conv2d::<f64>::new(&mut r, 1, 1, 2, 1, 0).is_err());
        assert!(Conv2d::<f64>::new(&mut r, 1, 1, 3, 1, 1).is_ok());
    }
}
