//! Across-channel local response normalization:
//! `b_c = a_c / (k + (α/n) Σ_{|c'-c| ≤ n/2} a_{c'}²)^β`.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrnConfig {
    /// Window size across channels (odd).
    pub size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
}

impl Default for LrnConfig {
    fn default() -> Self {
        LrnConfig { size: 5, alpha: 1e-4, beta: 0.75, k: 2.0 }
    }
}

impl LrnConfig {
    fn window(&self, c: usize, channels: usize) -> std::ops::Range<usize> {
        let half = self.size / 2;
        c.saturating_sub(half)..(c + half + 1).min(channels)
    }
}

/// Returns the output and the per-element denominator base `s` (before `^β`),
/// which the backward pass reuses.
pub fn lrn<T: Real>(input: &Tensor<T>, cfg: LrnConfig) -> Result<(Tensor<T>, Tensor<T>)> {
    let (n, c, h, w) = input.nchw()?;
    let plane = h * w;
    let x = input.data();
    let mut scale = Tensor::zeros(input.dims());
    let mut y = Tensor::zeros(input.dims());
    let coef = T::of(cfg.alpha / cfg.size as f64);
    let beta = T::of(cfg.beta);
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * plane;
            let s = &mut scale.data_mut()[off..off + plane];
            s.iter_mut().for_each(|v| *v = T::of(cfg.k));
            for j in cfg.window(ch, c) {
                let xj = &x[(b * c + j) * plane..][..plane];
                s.iter_mut().zip(xj).for_each(|(s, &a)| *s += coef * a * a);
            }
        }
    }
    for ((yv, &xv), &sv) in y.data_mut().iter_mut().zip(x).zip(scale.data()) {
        *yv = xv * sv.powf(-beta);
    }
    Ok((y, scale))
}

pub fn lrn_backward<T: Real>(
    input: &Tensor<T>,
    scale: &Tensor<T>,
    grad_output: &Tensor<T>,
    cfg: LrnConfig,
) -> Result<Tensor<T>> {
    if !input.same_shape(scale) || !input.same_shape(grad_output) {
        return Err(Error::Shape("lrn backward operands differ in shape".into()));
    }
    let (n, c, h, w) = input.nchw()?;
    let plane = h * w;
    let (x, s, dy) = (input.data(), scale.data(), grad_output.data());
    let beta = T::of(cfg.beta);
    let coef = T::of(2.0 * cfg.alpha * cfg.beta / cfg.size as f64);
    // r_c = dy_c * a_c * s_c^(-β-1)
    let r: Vec<T> = (0..x.len()).map(|i| dy[i] * x[i] * s[i].powf(-beta - T::one())).collect();
    let mut dx = Tensor::zeros(input.dims());
    let d = dx.data_mut();
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * plane;
            for p in 0..plane {
                d[off + p] = dy[off + p] * s[off + p].powf(-beta);
            }
            // the window is symmetric, so c' ∈ N(ch) iff ch ∈ N(c')
            for j in cfg.window(ch, c) {
                let rj = &r[(b * c + j) * plane..][..plane];
                for p in 0..plane {
                    d[off + p] -= coef * x[off + p] * rj[p];
                }
            }
        }
    }
    Ok(dx)
}
