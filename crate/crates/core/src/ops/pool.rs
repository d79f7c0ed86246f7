//! Max pooling with ceiling-mode output sizing.

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolConfig {
    pub kernel: usize,
    pub stride: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig { kernel: 3, stride: 2 }
    }
}

/// Flat input index of the selected element for every output element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices(pub Vec<usize>);

/// `ceil((H - k) / stride) + 1`. The last window may hang past the edge and
/// is clipped to the valid region.
pub fn pool_output_dim(input: usize, kernel: usize, stride: usize) -> Result<usize> {
    if input < kernel {
        return Err(Error::Geometry(format!("pool input {input} smaller than kernel {kernel}")));
    }
    if stride == 0 {
        return Err(Error::Geometry("pool stride must be >= 1".into()));
    }
    Ok((input - kernel).div_ceil(stride) + 1)
}

pub fn maxpool<T: Real>(input: &Tensor<T>, cfg: PoolConfig) -> Result<(Tensor<T>, PoolIndices)> {
    let (n, c, h, w) = input.nchw()?;
    let oh = pool_output_dim(h, cfg.kernel, cfg.stride)?;
    let ow = pool_output_dim(w, cfg.kernel, cfg.stride)?;
    let plane = oh * ow;
    let x = input.data();
    let mut out: Vec<(T, usize)> = vec![(T::zero(), 0); n * c * plane];
    par::for_each_chunk_mut(&mut out, plane, |pi, chunk| {
        let base = pi * h * w;
        for oy in 0..oh {
            let (y0, y1) = (oy * cfg.stride, (oy * cfg.stride + cfg.kernel).min(h));
            for ox in 0..ow {
                let (x0, x1) = (ox * cfg.stride, (ox * cfg.stride + cfg.kernel).min(w));
                let mut best = base + y0 * w + x0;
                for iy in y0..y1 {
                    for ix in x0..x1 {
                        let idx = base + iy * w + ix;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                }
                chunk[oy * ow + ox] = (x[best], best);
            }
        }
    });
    let (vals, idx): (Vec<T>, Vec<usize>) = out.into_iter().unzip();
    Ok((Tensor::from_vec(&input.image_dims_like(n, c, oh, ow), vals)?, PoolIndices(idx)))
}

pub fn maxpool_backward<T: Real>(
    input_dims: &[usize],
    indices: &PoolIndices,
    grad_output: &Tensor<T>,
) -> Result<Tensor<T>> {
    if indices.0.len() != grad_output.len() {
        return Err(Error::Shape(format!(
            "{} pool indices for gradient of {} elements",
            indices.0.len(),
            grad_output.len()
        )));
    }
    let mut dx = Tensor::zeros(input_dims);
    let d = dx.data_mut();
    for (&i, &g) in indices.0.iter().zip(grad_output.data()) {
        d[i] += g;
    }
    Ok(dx)
}
