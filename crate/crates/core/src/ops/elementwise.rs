//! ReLU, elementwise max fusion and channel concatenation.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

pub fn relu<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Subgradient at 0 is 0.
pub fn relu_backward<T: Real>(input: &Tensor<T>, grad_output: &Tensor<T>) -> Result<Tensor<T>> {
    if !input.same_shape(grad_output) {
        return Err(Error::Shape("relu backward shape mismatch".into()));
    }
    let mut dx = grad_output.clone();
    dx.data_mut()
        .iter_mut()
        .zip(input.data())
        .for_each(|(g, &x)| if x <= T::zero() { *g = T::zero() });
    Ok(dx)
}

/// `true` where the first operand was selected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSelector(pub Vec<bool>);

/// `y = max(a, b)` elementwise; ties select `a`.
pub fn elementwise_max<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<(Tensor<T>, MaxSelector)> {
    if !a.same_shape(b) {
        return Err(Error::Shape(format!("max fusion of {:?} and {:?}", a.dims(), b.dims())));
    }
    let sel: Vec<bool> = a.data().iter().zip(b.data()).map(|(x, y)| x >= y).collect();
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .zip(&sel)
        .map(|((&x, &y), &s)| if s { x } else { y })
        .collect();
    Ok((Tensor::from_vec(a.dims(), data)?, MaxSelector(sel)))
}

pub fn elementwise_max_backward<T: Real>(
    selector: &MaxSelector,
    grad_output: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    if selector.0.len() != grad_output.len() {
        return Err(Error::Shape("max selector / gradient length mismatch".into()));
    }
    let mut ga = Tensor::zeros(grad_output.dims());
    let mut gb = Tensor::zeros(grad_output.dims());
    for (i, (&s, &g)) in selector.0.iter().zip(grad_output.data()).enumerate() {
        if s {
            ga.data_mut()[i] = g;
        } else {
            gb.data_mut()[i] = g;
        }
    }
    Ok((ga, gb))
}

/// Stacks `a` then `b` along the channel axis.
pub fn channel_concat<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (na, ca, ha, wa) = a.nchw()?;
    let (nb, cb, hb, wb) = b.nchw()?;
    if (na, ha, wa) != (nb, hb, wb) || a.rank() != b.rank() {
        return Err(Error::Shape(format!("concat of {:?} and {:?}", a.dims(), b.dims())));
    }
    let plane = ha * wa;
    let mut data = Vec::with_capacity(a.len() + b.len());
    for n in 0..na {
        data.extend_from_slice(&a.data()[n * ca * plane..][..ca * plane]);
        data.extend_from_slice(&b.data()[n * cb * plane..][..cb * plane]);
    }
    Tensor::from_vec(&a.image_dims_like(na, ca + cb, ha, wa), data)
}

/// Inverse of [`channel_concat`]: the first `channels_a` channels, then the rest.
pub fn channel_split<T: Real>(t: &Tensor<T>, channels_a: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, c, h, w) = t.nchw()?;
    if channels_a == 0 || channels_a >= c {
        return Err(Error::Shape(format!("cannot split {c} channels at {channels_a}")));
    }
    let plane = h * w;
    let cb = c - channels_a;
    let mut a = Vec::with_capacity(n * channels_a * plane);
    let mut b = Vec::with_capacity(n * cb * plane);
    for i in 0..n {
        let img = &t.data()[i * c * plane..][..c * plane];
        a.extend_from_slice(&img[..channels_a * plane]);
        b.extend_from_slice(&img[channels_a * plane..]);
    }
    Ok((
        Tensor::from_vec(&t.image_dims_like(n, channels_a, h, w), a)?,
        Tensor::from_vec(&t.image_dims_like(n, cb, h, w), b)?,
    ))
}
