//! Rank-4 tensors over a scalar type.
//!
//! Everything in the network engine is (batch, channels, height, width),
//! row-major. Training runs in f32; gradient verification instantiates the
//! same code at f64 where central differences are trustworthy.

use crate::error::{Error, Result};

/// Element type of the engine: f32 for training, f64 for verification.
pub trait Scalar:
    num_traits::Float
    + ndarray::LinalgScalar
    + rand::distr::uniform::SampleUniform
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Infallible f64 -> T for literals and hyperparameters.
pub fn fs<T: Scalar>(v: f64) -> T {
    T::from(v).expect("finite f64 converts to any Scalar")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    dims: [usize; 4],
    data: Vec<T>,
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Tensor {
            dims,
            data: vec![T::zero(); dims.iter().product()],
            grad: None,
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::validation(format!(
                "tensor data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Tensor {
            dims,
            data,
            grad: None,
        })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for n in 0..dims[0] {
            for c in 0..dims[1] {
                for y in 0..dims[2] {
                    for x in 0..dims[3] {
                        data.push(f(n, c, y, x));
                    }
                }
            }
        }
        Tensor {
            dims,
            data,
            grad: None,
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn offset(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(n < self.dims[0] && c < self.dims[1] && y < self.dims[2] && x < self.dims[3]);
        ((n * self.dims[1] + c) * self.dims[2] + y) * self.dims[3] + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> T {
        self.data[self.offset(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: T) {
        let i = self.offset(n, c, y, x);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Gradient buffer, allocating a zeroed one on first use.
    pub fn grad_mut(&mut self) -> &mut [T] {
        let len = self.data.len();
        self.grad.get_or_insert_with(|| vec![T::zero(); len])
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    /// Mutable values alongside the (read-only) gradient, for optimizers.
    pub fn value_and_grad(&mut self) -> (&mut [T], Option<&[T]>) {
        (&mut self.data, self.grad.as_deref())
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.fill(T::zero());
        }
    }

    /// Same dims, fresh zeroed data, no grad.
    pub fn same_shape(&self) -> Self {
        Tensor::zeros(self.dims)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
            grad: None,
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Checks two tensors share dims, for ops that require it.
pub fn same_dims<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::validation(format!(
            "{what}: dims {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor::from_fn([2, 3, 4, 5], |n, c, y, x| (1000 * n + 100 * c + 10 * y + x) as f64);
        assert_eq!(t.at(0, 0, 0, 0), 0.0);
        assert_eq!(t.at(0, 0, 0, 1), 1.0);
        assert_eq!(t.at(1, 2, 3, 4), 1234.0);
        assert_eq!(t.data()[t.len() - 1], 1234.0);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Tensor::from_vec([1, 1, 2, 2], vec![0.0f32; 3]).is_err());
        assert!(Tensor::from_vec([1, 1, 2, 2], vec![0.0f32; 4]).is_ok());
    }

    #[test]
    fn grad_allocates_lazily_and_zeroes() {
        let mut t = Tensor::<f64>::zeros([1, 1, 2, 2]);
        assert!(t.grad().is_none());
        t.grad_mut()[3] = 7.0;
        assert_eq!(t.grad().unwrap()[3], 7.0);
        t.zero_grad();
        assert!(t.grad().unwrap().iter().all(|&v| v == 0.0));
    }
}
