//! Reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use dynsal_core::ops::ConvParams;
use dynsal_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(dims: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(dims, |_| rng.random_range(-1.0..1.0))
}

pub fn params(d_out: usize, d_in: usize, f: usize, p: usize, s: usize, rng: &mut ChaCha8Rng) -> ConvParams<f64> {
    ConvParams::new(uniform(&[d_out, d_in, f, f], rng), uniform(&[d_out], rng), p, s).unwrap()
}

fn at(t: &Tensor<f64>, n: usize, c: usize, y: usize, x: usize) -> f64 {
    let d = t.dims();
    t.data()[((n * d[1] + c) * d[2] + y) * d[3] + x]
}

/// Nested-loop cross-correlation over an NCHW tensor.
pub fn conv_oracle(x: &Tensor<f64>, p: &ConvParams<f64>) -> Tensor<f64> {
    let (n, ci, h, w) = (x.dims()[0], x.dims()[1], x.dims()[2], x.dims()[3]);
    let (co, f, pad, s) = (p.d_out(), p.kernel(), p.padding as isize, p.stride);
    let oh = (h + 2 * p.padding - f) / s + 1;
    let ow = (w + 2 * p.padding - f) / s + 1;
    let mut out = vec![0.0; n * co * oh * ow];
    for b in 0..n {
        for o in 0..co {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = p.bias.data()[o];
                    for i in 0..ci {
                        for ky in 0..f {
                            for kx in 0..f {
                                let iy = (oy * s + ky) as isize - pad;
                                let ix = (ox * s + kx) as isize - pad;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                acc += at(&p.filters, o, i, ky, kx) * at(x, b, i, iy as usize, ix as usize);
                            }
                        }
                    }
                    out[((b * co + o) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    Tensor::from_vec(&[n, co, oh, ow], out).unwrap()
}

/// Matrix of the linear part of `conv(·, p)` acting on inputs of `dims`,
/// built column by column from unit inputs; `rows × cols`, row-major.
pub fn conv_matrix(dims: &[usize], p: &ConvParams<f64>) -> (Vec<f64>, usize, usize) {
    let cols: usize = dims.iter().product();
    let zero_bias = ConvParams { bias: Tensor::zeros(&[p.d_out()]), ..p.clone() };
    let mut columns = vec![];
    for j in 0..cols {
        let mut e = Tensor::zeros(dims);
        e.data_mut()[j] = 1.0;
        columns.push(conv_oracle(&e, &zero_bias).into_vec());
    }
    let rows = columns[0].len();
    let mut m = vec![0.0; rows * cols];
    for (j, c) in columns.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            m[i * cols + j] = v;
        }
    }
    (m, rows, cols)
}

/// Exhaustive 3×3 / stride-2 ceil-mode window maxima.
pub fn pool_oracle(x: &Tensor<f64>) -> Tensor<f64> {
    let (n, c, h, w) = (x.dims()[0], x.dims()[1], x.dims()[2], x.dims()[3]);
    let oh = (h - 3).div_ceil(2) + 1;
    let ow = (w - 3).div_ceil(2) + 1;
    Tensor::from_fn(&[n, c, oh, ow], |idx| {
        let (ox, oy, ch, b) = (idx % ow, (idx / ow) % oh, (idx / (ow * oh)) % c, idx / (ow * oh * c));
        let mut best = f64::NEG_INFINITY;
        for y in oy * 2..(oy * 2 + 3).min(h) {
            for xx in ox * 2..(ox * 2 + 3).min(w) {
                best = best.max(at(x, b, ch, y, xx));
            }
        }
        best
    })
}

/// Across-channel LRN written straight from the formula.
pub fn lrn_oracle(x: &Tensor<f64>, n: usize, alpha: f64, beta: f64, k: f64) -> Tensor<f64> {
    let d = x.dims().to_vec();
    let c = d[1];
    Tensor::from_fn(&d, |idx| {
        let plane = d[2] * d[3];
        let (ch, b, pix) = ((idx / plane) % c, idx / (plane * c), idx % plane);
        let lo = ch.saturating_sub(n / 2);
        let hi = (ch + n / 2).min(c - 1);
        let sum: f64 = (lo..=hi).map(|j| x.data()[(b * c + j) * plane + pix].powi(2)).sum();
        x.data()[idx] / (k + alpha / n as f64 * sum).powf(beta)
    })
}

use dynsal_core::nets::Model;

/// All parameters of `m`, concatenated in declaration order.
pub fn flatten(m: &Model<f64>) -> Vec<f64> {
    m.params().iter().flat_map(|(_, t)| t.data().to_vec()).collect()
}

pub fn unflatten(m: &mut Model<f64>, flat: &[f64]) {
    let mut pos = 0;
    for t in m.params_mut() {
        let n = t.len();
        t.data_mut().copy_from_slice(&flat[pos..pos + n]);
        pos += n;
    }
}

/// `per_tensor` seeded coordinates from every parameter tensor, as indices
/// into the flattened parameter vector.
pub fn sampled_coords(m: &Model<f64>, per_tensor: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    let mut out = vec![];
    let mut base = 0;
    for (_, t) in m.params() {
        for _ in 0..per_tensor.min(t.len()) {
            out.push(base + r.random_range(0..t.len()));
        }
        base += t.len();
    }
    out.sort();
    out.dedup();
    out
}
