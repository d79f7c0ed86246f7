//! 2-D cross-correlation and its transpose.
//!
//! Three primitive kernels do all the work:
//!
//! * `gather`: `y[o] = Σ_i W[o,i] ⋆ x[i]` (forward conv, backward deconv)
//! * `scatter`: the exact adjoint of `gather` (backward conv, forward deconv)
//! * `weight_grad`: `∂⟨gather(x, W), g⟩ / ∂W`
//!
//! Work is split over output planes; every output element is reduced in a
//! fixed order by a single task. Small problems go through an unrolled
//! patch matrix (`im2col`) so the inner loops run over whole planes.

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{Real, Tensor};

/// Filter bank and geometry of a convolution or deconvolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T: Real = f64> {
    /// `(D_out, D_in, f, f)`.
    pub filters: Tensor<T>,
    /// Length `D_out`.
    pub bias: Tensor<T>,
    pub padding: usize,
    pub stride: usize,
}

impl<T: Real> ConvParams<T> {
    pub fn new(filters: Tensor<T>, bias: Tensor<T>, padding: usize, stride: usize) -> Result<Self> {
        let p = ConvParams { filters, bias, padding, stride };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(d_out: usize, d_in: usize, f: usize, padding: usize, stride: usize) -> Self {
        ConvParams {
            filters: Tensor::zeros(&[d_out, d_in, f, f]),
            bias: Tensor::zeros(&[d_out]),
            padding,
            stride,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.filters.dims();
        if d.len() != 4 || d[2] != d[3] {
            return Err(Error::Shape(format!("filters must be (D_out, D_in, f, f), got {d:?}")));
        }
        if self.stride == 0 {
            return Err(Error::Geometry("stride must be >= 1".into()));
        }
        if self.bias.dims() != [d[0]] {
            return Err(Error::Shape(format!(
                "bias dims {:?} do not match D_out = {}",
                self.bias.dims(),
                d[0]
            )));
        }
        Ok(())
    }

    pub fn d_out(&self) -> usize {
        self.filters.dims()[0]
    }

    pub fn d_in(&self) -> usize {
        self.filters.dims()[1]
    }

    pub fn kernel(&self) -> usize {
        self.filters.dims()[2]
    }
}

/// Gradients of a (de)convolution with respect to its input and parameters.
#[derive(Debug, Clone)]
pub struct ConvGrads<T: Real = f64> {
    pub input: Tensor<T>,
    pub filters: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv_output_dim(input: usize, f: usize, padding: usize, stride: usize) -> Result<usize> {
    let padded = input + 2 * padding;
    if padded < f {
        return Err(Error::Geometry(format!(
            "kernel {f} exceeds padded input {padded} (input {input}, padding {padding})"
        )));
    }
    Ok((padded - f) / stride + 1)
}

pub fn deconv_output_dim(input: usize, f: usize, padding: usize, stride: usize) -> Result<usize> {
    let full = stride * (input - 1) + f;
    if full <= 2 * padding {
        return Err(Error::Geometry(format!(
            "deconv output {full} - 2*{padding} is not positive (input {input})"
        )));
    }
    Ok(full - 2 * padding)
}

struct Geom {
    n: usize,
    // channels of the small-index side (`gather` input / `scatter` output)
    ci: usize,
    h: usize,
    w: usize,
    co: usize,
    oh: usize,
    ow: usize,
    f: usize,
    s: usize,
    p: usize,
}

impl Geom {
    /// Range of output columns `ox` whose tap `kx` lands inside the input row.
    #[inline]
    fn ox_range(&self, kx: usize) -> (usize, usize) {
        let lo = if kx >= self.p { 0 } else { (self.p - kx).div_ceil(self.s) };
        // ox*s + kx - p <= w - 1
        let lim = (self.w + self.p) as isize - kx as isize;
        if lim <= 0 {
            return (0, 0);
        }
        let hi = ((lim as usize - 1) / self.s + 1).min(self.ow);
        (lo.min(hi), hi)
    }

    #[inline]
    fn input_row(&self, oy: usize, ky: usize) -> Option<usize> {
        let iy = (oy * self.s + ky) as isize - self.p as isize;
        (iy >= 0 && (iy as usize) < self.h).then_some(iy as usize)
    }
}

fn gather_direct<T: Real>(x: &[T], wts: &[T], g: &Geom, bias: Option<&[T]>) -> Vec<T> {
    let plane = g.oh * g.ow;
    let mut y = vec![T::zero(); g.n * g.co * plane];
    par::for_each_chunk_mut(&mut y, plane, |idx, out| {
        let (n, o) = (idx / g.co, idx % g.co);
        if let Some(b) = bias {
            out.iter_mut().for_each(|v| *v = b[o]);
        }
        for i in 0..g.ci {
            let xin = &x[(n * g.ci + i) * g.h * g.w..][..g.h * g.w];
            let wk = &wts[(o * g.ci + i) * g.f * g.f..][..g.f * g.f];
            for ky in 0..g.f {
                for kx in 0..g.f {
                    let wv = wk[ky * g.f + kx];
                    let (lo, hi) = g.ox_range(kx);
                    if lo >= hi {
                        continue;
                    }
                    for oy in 0..g.oh {
                        let Some(iy) = g.input_row(oy, ky) else { continue };
                        let orow = &mut out[oy * g.ow..][lo..hi];
                        let start = lo * g.s + kx - g.p;
                        if g.s == 1 {
                            let irow = &xin[iy * g.w + start..][..hi - lo];
                            orow.iter_mut().zip(irow).for_each(|(o, &v)| *o += wv * v);
                        } else {
                            let irow = &xin[iy * g.w..(iy + 1) * g.w];
                            for (k, o) in orow.iter_mut().enumerate() {
                                *o += wv * irow[start + k * g.s];
                            }
                        }
                    }
                }
            }
        }
    });
    y
}

fn scatter_direct<T: Real>(y: &[T], wts: &[T], g: &Geom) -> Vec<T> {
    let plane = g.h * g.w;
    let mut x = vec![T::zero(); g.n * g.ci * plane];
    par::for_each_chunk_mut(&mut x, plane, |idx, xin| {
        let (n, i) = (idx / g.ci, idx % g.ci);
        for o in 0..g.co {
            let yout = &y[(n * g.co + o) * g.oh * g.ow..][..g.oh * g.ow];
            let wk = &wts[(o * g.ci + i) * g.f * g.f..][..g.f * g.f];
            for ky in 0..g.f {
                for kx in 0..g.f {
                    let wv = wk[ky * g.f + kx];
                    let (lo, hi) = g.ox_range(kx);
                    if lo >= hi {
                        continue;
                    }
                    for oy in 0..g.oh {
                        let Some(iy) = g.input_row(oy, ky) else { continue };
                        let yrow = &yout[oy * g.ow..][lo..hi];
                        let start = lo * g.s + kx - g.p;
                        if g.s == 1 {
                            let xrow = &mut xin[iy * g.w + start..][..hi - lo];
                            xrow.iter_mut().zip(yrow).for_each(|(d, &v)| *d += wv * v);
                        } else {
                            let xrow = &mut xin[iy * g.w..(iy + 1) * g.w];
                            for (k, &v) in yrow.iter().enumerate() {
                                xrow[start + k * g.s] += wv * v;
                            }
                        }
                    }
                }
            }
        }
    });
    x
}

fn weight_grad_direct<T: Real>(x: &[T], dy: &[T], g: &Geom) -> Vec<T> {
    let per_out = g.ci * g.f * g.f;
    let mut dw = vec![T::zero(); g.co * per_out];
    par::for_each_chunk_mut(&mut dw, per_out, |o, dwo| {
        for i in 0..g.ci {
            for ky in 0..g.f {
                for kx in 0..g.f {
                    let (lo, hi) = g.ox_range(kx);
                    let mut acc = T::zero();
                    if lo < hi {
                        for n in 0..g.n {
                            let xin = &x[(n * g.ci + i) * g.h * g.w..][..g.h * g.w];
                            let gout = &dy[(n * g.co + o) * g.oh * g.ow..][..g.oh * g.ow];
                            for oy in 0..g.oh {
                                let Some(iy) = g.input_row(oy, ky) else { continue };
                                let grow = &gout[oy * g.ow..][lo..hi];
                                let start = lo * g.s + kx - g.p;
                                if g.s == 1 {
                                    let irow = &xin[iy * g.w + start..][..hi - lo];
                                    acc += grow.iter().zip(irow).map(|(&a, &b)| a * b).sum::<T>();
                                } else {
                                    let irow = &xin[iy * g.w..(iy + 1) * g.w];
                                    for (k, &gv) in grow.iter().enumerate() {
                                        acc += gv * irow[start + k * g.s];
                                    }
                                }
                            }
                        }
                    }
                    dwo[(i * g.f + ky) * g.f + kx] = acc;
                }
            }
        }
    });
    dw
}

/// Patch matrices above this many elements fall back to the direct kernels.
const COLS_LIMIT: usize = 1 << 22;

impl Geom {
    fn use_cols(&self) -> bool {
        self.n * self.ci * self.f * self.f * self.oh * self.ow <= COLS_LIMIT
    }
}

/// `out += Σ_j w[j] · rows[j]`, four rows per pass over `out`.
#[inline]
fn axpy4<T: Real>(out: &mut [T], w: [T; 4], rows: [&[T]; 4]) {
    let [a, b, c, d] = rows;
    for (i, o) in out.iter_mut().enumerate() {
        *o += w[0] * a[i] + w[1] * b[i] + w[2] * c[i] + w[3] * d[i];
    }
}

/// Dot product over eight interleaved partial sums, combined in a fixed order.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `(ci·f·f, oh·ow)` patch matrix of every batch element, zero where a tap
/// falls into the padding.
fn im2col<T: Real>(x: &[T], g: &Geom) -> Vec<T> {
    let (kk, pl) = (g.f * g.f, g.oh * g.ow);
    let mut cols = vec![T::zero(); g.n * g.ci * kk * pl];
    par::for_each_chunk_mut(&mut cols, kk * pl, |idx, c| {
        let xin = &x[idx * g.h * g.w..][..g.h * g.w];
        for ky in 0..g.f {
            for kx in 0..g.f {
                let row = &mut c[(ky * g.f + kx) * pl..][..pl];
                let (lo, hi) = g.ox_range(kx);
                if lo >= hi {
                    continue;
                }
                for oy in 0..g.oh {
                    let Some(iy) = g.input_row(oy, ky) else { continue };
                    let dst = &mut row[oy * g.ow..][lo..hi];
                    let start = lo * g.s + kx - g.p;
                    if g.s == 1 {
                        dst.copy_from_slice(&xin[iy * g.w + start..][..hi - lo]);
                    } else {
                        for (k, d) in dst.iter_mut().enumerate() {
                            *d = xin[iy * g.w + start + k * g.s];
                        }
                    }
                }
            }
        }
    });
    cols
}

fn gather_cols<T: Real>(x: &[T], wts: &[T], g: &Geom, bias: Option<&[T]>) -> Vec<T> {
    let (k, pl) = (g.ci * g.f * g.f, g.oh * g.ow);
    let cols = im2col(x, g);
    let mut y = vec![T::zero(); g.n * g.co * pl];
    par::for_each_chunk_mut(&mut y, pl, |idx, out| {
        let (n, o) = (idx / g.co, idx % g.co);
        if let Some(b) = bias {
            out.iter_mut().for_each(|v| *v = b[o]);
        }
        let c = &cols[n * k * pl..][..k * pl];
        let wo = &wts[o * k..][..k];
        let mut r = 0;
        while r + 4 <= k {
            let ws = [wo[r], wo[r + 1], wo[r + 2], wo[r + 3]];
            axpy4(out, ws, [&c[r * pl..][..pl], &c[(r + 1) * pl..][..pl], &c[(r + 2) * pl..][..pl], &c[(r + 3) * pl..][..pl]]);
            r += 4;
        }
        for r in r..k {
            out.iter_mut().zip(&c[r * pl..][..pl]).for_each(|(o, &v)| *o += wo[r] * v);
        }
    });
    y
}

fn scatter_cols<T: Real>(y: &[T], wts: &[T], g: &Geom) -> Vec<T> {
    let (kk, pl) = (g.f * g.f, g.oh * g.ow);
    let k = g.ci * kk;
    let mut x = vec![T::zero(); g.n * g.ci * g.h * g.w];
    par::for_each_chunk_mut(&mut x, g.h * g.w, |idx, xin| {
        let (n, i) = (idx / g.ci, idx % g.ci);
        let mut tmp = vec![T::zero(); pl];
        for ky in 0..g.f {
            for kx in 0..g.f {
                let (lo, hi) = g.ox_range(kx);
                if lo >= hi {
                    continue;
                }
                tmp.iter_mut().for_each(|v| *v = T::zero());
                let r = i * kk + ky * g.f + kx;
                let yo = |o: usize| &y[(n * g.co + o) * pl..][..pl];
                let mut o = 0;
                while o + 4 <= g.co {
                    let ws = [wts[o * k + r], wts[(o + 1) * k + r], wts[(o + 2) * k + r], wts[(o + 3) * k + r]];
                    axpy4(&mut tmp, ws, [yo(o), yo(o + 1), yo(o + 2), yo(o + 3)]);
                    o += 4;
                }
                for o in o..g.co {
                    let wv = wts[o * k + r];
                    tmp.iter_mut().zip(yo(o)).for_each(|(t, &v)| *t += wv * v);
                }
                for oy in 0..g.oh {
                    let Some(iy) = g.input_row(oy, ky) else { continue };
                    let src = &tmp[oy * g.ow..][lo..hi];
                    let start = lo * g.s + kx - g.p;
                    if g.s == 1 {
                        let xrow = &mut xin[iy * g.w + start..][..hi - lo];
                        xrow.iter_mut().zip(src).for_each(|(d, &v)| *d += v);
                    } else {
                        for (q, &v) in src.iter().enumerate() {
                            xin[iy * g.w + start + q * g.s] += v;
                        }
                    }
                }
            }
        }
    });
    x
}

fn weight_grad_cols<T: Real>(x: &[T], dy: &[T], g: &Geom) -> Vec<T> {
    let (k, pl) = (g.ci * g.f * g.f, g.oh * g.ow);
    let cols = im2col(x, g);
    let mut dw = vec![T::zero(); g.co * k];
    par::for_each_chunk_mut(&mut dw, k, |o, dwo| {
        for (r, d) in dwo.iter_mut().enumerate() {
            let mut acc = T::zero();
            for n in 0..g.n {
                let gout = &dy[(n * g.co + o) * pl..][..pl];
                let c = &cols[(n * k + r) * pl..][..pl];
                acc += dot(gout, c);
            }
            *d = acc;
        }
    });
    dw
}

fn gather<T: Real>(x: &[T], wts: &[T], g: &Geom, bias: Option<&[T]>) -> Vec<T> {
    if g.use_cols() {
        gather_cols(x, wts, g, bias)
    } else {
        gather_direct(x, wts, g, bias)
    }
}

fn scatter<T: Real>(y: &[T], wts: &[T], g: &Geom) -> Vec<T> {
    if g.use_cols() {
        scatter_cols(y, wts, g)
    } else {
        scatter_direct(y, wts, g)
    }
}

fn weight_grad<T: Real>(x: &[T], dy: &[T], g: &Geom) -> Vec<T> {
    if g.use_cols() {
        weight_grad_cols(x, dy, g)
    } else {
        weight_grad_direct(x, dy, g)
    }
}

fn bias_grad<T: Real>(dy: &[T], n: usize, c: usize, plane: usize) -> Tensor<T> {
    Tensor::from_fn(&[c], |o| {
        (0..n).map(|b| dy[(b * c + o) * plane..][..plane].iter().copied().sum::<T>()).sum()
    })
}

/// Swaps the first two axes of a `(A, B, f, f)` filter bank.
fn transpose_channels<T: Real>(w: &Tensor<T>) -> Tensor<T> {
    let d = w.dims();
    let (a, b, kk) = (d[0], d[1], d[2] * d[3]);
    let src = w.data();
    let mut out = vec![T::zero(); src.len()];
    for i in 0..a {
        for j in 0..b {
            out[(j * a + i) * kk..][..kk].copy_from_slice(&src[(i * b + j) * kk..][..kk]);
        }
    }
    Tensor::from_vec(&[b, a, d[2], d[3]], out).expect("same element count")
}

fn conv_geom<T: Real>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Geom> {
    params.validate()?;
    let (n, c, h, w) = input.nchw()?;
    if c != params.d_in() {
        return Err(Error::Shape(format!(
            "input has {c} channels, filters expect {}",
            params.d_in()
        )));
    }
    let f = params.kernel();
    let oh = conv_output_dim(h, f, params.padding, params.stride)?;
    let ow = conv_output_dim(w, f, params.padding, params.stride)?;
    Ok(Geom { n, ci: c, h, w, co: params.d_out(), oh, ow, f, s: params.stride, p: params.padding })
}

/// Cross-correlation plus bias. Output spatial dims are
/// `floor((H + 2p - f) / stride) + 1`.
pub fn conv2d<T: Real>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Tensor<T>> {
    let g = conv_geom(input, params)?;
    let y = gather(input.data(), params.filters.data(), &g, Some(params.bias.data()));
    Tensor::from_vec(&input.image_dims_like(g.n, g.co, g.oh, g.ow), y)
}

pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    grad_output: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let g = conv_geom(input, params)?;
    let expect = input.image_dims_like(g.n, g.co, g.oh, g.ow);
    if grad_output.dims() != expect.as_slice() {
        return Err(Error::Shape(format!(
            "output gradient {:?}, expected {expect:?}",
            grad_output.dims()
        )));
    }
    let dx = scatter(grad_output.data(), params.filters.data(), &g);
    let dw = weight_grad(input.data(), grad_output.data(), &g);
    Ok(ConvGrads {
        input: Tensor::from_vec(input.dims(), dx)?,
        filters: Tensor::from_vec(params.filters.dims(), dw)?,
        bias: bias_grad(grad_output.data(), g.n, g.co, g.oh * g.ow),
    })
}

/// Geometry of a deconvolution phrased as the conv it transposes: the
/// deconv output is the conv's input side.
fn deconv_geom<T: Real>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Geom> {
    params.validate()?;
    let (n, c, h, w) = input.nchw()?;
    if c != params.d_in() {
        return Err(Error::Shape(format!(
            "input has {c} channels, deconv filters expect {}",
            params.d_in()
        )));
    }
    let f = params.kernel();
    let oh = deconv_output_dim(h, f, params.padding, params.stride)?;
    let ow = deconv_output_dim(w, f, params.padding, params.stride)?;
    Ok(Geom {
        n,
        ci: params.d_out(),
        h: oh,
        w: ow,
        co: c,
        oh: h,
        ow: w,
        f,
        s: params.stride,
        p: params.padding,
    })
}

/// Transposed convolution: the adjoint of [`conv2d`] (without bias) for the
/// filter bank with its channel axes swapped, plus bias. Filters are
/// `(D_out, D_in, f, f)` with `D_in` matching the input channels; output
/// spatial dims are `stride * (H - 1) + f - 2p`.
pub fn deconv2d<T: Real>(input: &Tensor<T>, params: &ConvParams<T>) -> Result<Tensor<T>> {
    let g = deconv_geom(input, params)?;
    let wt = transpose_channels(&params.filters);
    let mut y = scatter(input.data(), wt.data(), &g);
    let plane = g.h * g.w;
    for (idx, chunk) in y.chunks_mut(plane).enumerate() {
        let b = params.bias.data()[idx % g.ci];
        chunk.iter_mut().for_each(|v| *v += b);
    }
    Tensor::from_vec(&input.image_dims_like(g.n, g.ci, g.h, g.w), y)
}

pub fn deconv2d_backward<T: Real>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    grad_output: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let g = deconv_geom(input, params)?;
    let expect = input.image_dims_like(g.n, g.ci, g.h, g.w);
    if grad_output.dims() != expect.as_slice() {
        return Err(Error::Shape(format!(
            "output gradient {:?}, expected {expect:?}",
            grad_output.dims()
        )));
    }
    let wt = transpose_channels(&params.filters);
    let dx = gather(grad_output.data(), wt.data(), &g, None);
    let dwt = weight_grad(grad_output.data(), input.data(), &g);
    let dwt = Tensor::from_vec(wt.dims(), dwt)?;
    Ok(ConvGrads {
        input: Tensor::from_vec(input.dims(), dx)?,
        filters: transpose_channels(&dwt),
        bias: bias_grad(grad_output.data(), g.n, g.ci, g.h * g.w),
    })
}
