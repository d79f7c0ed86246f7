//! Dense row-major tensors.
//!
//! Image-like tensors are laid out NCHW. Rank-3 tensors are read as a single
//! image (`N = 1`); filter banks use `(D_out, D_in, f, f)`; biases are rank 1.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

use crate::error::{Error, Result};

/// Scalar type of the engine: `f64` for checks and oracles, `f32` for training.
pub trait Real:
    Float + Default + Debug + Display + AddAssign + SubAssign + MulAssign + Sum + Send + Sync + 'static
{
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor<T = f64> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Debug> Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor{:?}", self.dims)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl<T: Real> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        Self::filled(dims, T::zero())
    }

    pub fn filled(dims: &[usize], value: T) -> Self {
        assert!(!dims.is_empty() && dims.iter().all(|&d| d >= 1), "invalid dims {dims:?}");
        let len = dims.iter().product();
        Tensor { dims: dims.to_vec(), data: vec![value; len] }
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Shape(format!("dims must all be >= 1, got {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims: dims.to_vec(), data })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let mut t = Self::zeros(dims);
        t.data.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// `(N, C, H, W)` for rank-3 or rank-4 tensors.
    pub fn nchw(&self) -> Result<(usize, usize, usize, usize)> {
        match *self.dims.as_slice() {
            [c, h, w] => Ok((1, c, h, w)),
            [n, c, h, w] => Ok((n, c, h, w)),
            _ => Err(Error::Shape(format!("expected rank 3 or 4, got dims {:?}", self.dims))),
        }
    }

    /// Dims with the same rank as `self` but a new `(N, C, H, W)`.
    pub(crate) fn image_dims_like(&self, n: usize, c: usize, h: usize, w: usize) -> Vec<usize> {
        if self.rank() == 3 {
            vec![c, h, w]
        } else {
            vec![n, c, h, w]
        }
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != self.data.len() || dims.contains(&0) {
            return Err(Error::Shape(format!("cannot reshape {:?} into {dims:?}", self.dims)));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims == other.dims
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor { dims: self.dims.clone(), data: self.data.iter().map(|v| U::of(v.f64())).collect() }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor { dims: self.dims.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!("axpy {:?} vs {:?}", self.dims, other.dims)));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, &b)| *a += alpha * b);
        Ok(())
    }

    pub fn scale(&mut self, alpha: T) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Inner product accumulated in double precision.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!("dot {:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.f64() * b.f64()).sum())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.f64()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.f64() - b.f64()).abs())
            .fold(0.0, f64::max)
    }

    /// Channel plane `c` of image `n`.
    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let (_, ch, h, w) = self.nchw().expect("image tensor");
        let off = (n * ch + c) * h * w;
        &self.data[off..off + h * w]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [T] {
        let (_, ch, h, w) = self.nchw().expect("image tensor");
        let off = (n * ch + c) * h * w;
        &mut self.data[off..off + h * w]
    }
}
