//! Horn–Schunck dense optical flow.
//!
//! Minimizes `Σ (I_x u + I_y v + I_t)² + λ (|∇u|² + |∇v|²)` by Jacobi
//! iteration. Spatial derivatives are central differences averaged over the
//! two frames, borders are replicated. With `levels > 1` the estimate is
//! refined coarse-to-fine, warping the second frame by the upsampled flow.

use log::warn;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::map::Map;
use crate::resample::{resize_plane, sample_clamped};
use crate::tensor::Tensor;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HornSchunck {
    pub iterations: usize,
    /// Weight λ of the smoothness term, in squared intensity units
    /// (intensities in [0, 1]).
    pub smoothness: f64,
    /// Pyramid levels, 1 to 3.
    pub levels: usize,
}

impl Default for HornSchunck {
    fn default() -> Self {
        HornSchunck { iterations: 200, smoothness: 0.01, levels: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowEstimate {
    pub field: FlowField,
    /// L2 norm of the `(u, v)` change at every iteration of the finest level.
    pub update_norms: Vec<f64>,
}

/// ITU-R 601 luma of a `(3, H, W)` tensor.
pub fn to_gray(rgb: &Tensor<f64>) -> Result<Map> {
    let (_, c, h, w) = rgb.nchw()?;
    if c != 3 {
        return Err(Error::Shape(format!("grayscale conversion needs 3 channels, got {c}")));
    }
    let data = (0..h * w)
        .map(|i| (0..3).map(|ch| LUMA[ch] * rgb.plane(0, ch)[i]).sum())
        .collect();
    Map::from_vec(w, h, data)
}

fn variance(m: &Map) -> f64 {
    let n = m.len() as f64;
    let mean = m.sum() / n;
    m.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

pub fn estimate_flow(frame0: &Map, frame1: &Map, params: &HornSchunck) -> Result<FlowEstimate> {
    if !frame0.same_dims(frame1) {
        return Err(Error::Shape(format!(
            "frames differ in size: {}x{} vs {}x{}",
            frame0.width(),
            frame0.height(),
            frame1.width(),
            frame1.height()
        )));
    }
    if !(1..=3).contains(&params.levels) {
        return Err(Error::Spec(format!("flow pyramid levels must be 1..=3, got {}", params.levels)));
    }
    if !(params.smoothness > 0.0) {
        return Err(Error::Spec(format!("smoothness must be > 0, got {}", params.smoothness)));
    }
    let (w, h) = (frame0.width(), frame0.height());
    if variance(frame0) == 0.0 && variance(frame1) == 0.0 {
        warn!("zero-variance frames ({w}x{h}); returning zero flow");
        return Ok(FlowEstimate { field: FlowField::zeros(w, h), update_norms: vec![] });
    }

    // coarse-to-fine pyramid, finest first
    let mut pyramid = vec![(frame0.clone(), frame1.clone())];
    for _ in 1..params.levels {
        let (a, b) = pyramid.last().unwrap();
        let (nw, nh) = (a.width().div_ceil(2), a.height().div_ceil(2));
        if nw < 4 || nh < 4 {
            break;
        }
        let down = |m: &Map| resize_plane(m.data(), m.width(), m.height(), nw, nh).and_then(|d| Map::from_vec(nw, nh, d));
        pyramid.push((down(a)?, down(b)?));
    }

    let mut u: Vec<f64> = Vec::new();
    let mut v: Vec<f64> = Vec::new();
    let mut norms = Vec::new();
    let (mut cw, mut ch) = (0, 0);
    for (i0, i1) in pyramid.iter().rev() {
        let (lw, lh) = (i0.width(), i0.height());
        if u.is_empty() {
            u = vec![0.0; lw * lh];
            v = vec![0.0; lw * lh];
        } else {
            let sx = lw as f64 / cw as f64;
            let sy = lh as f64 / ch as f64;
            u = resize_plane(&u, cw, ch, lw, lh)?.into_iter().map(|x| x * sx).collect();
            v = resize_plane(&v, cw, ch, lw, lh)?.into_iter().map(|x| x * sy).collect();
        }
        (cw, ch) = (lw, lh);
        let warped = warp(i1, &u, &v);
        let (du, dv, n) = solve_level(i0, &warped, params)?;
        u.iter_mut().zip(&du).for_each(|(a, b)| *a += b);
        v.iter_mut().zip(&dv).for_each(|(a, b)| *a += b);
        norms = n;
    }
    let field = FlowField::new(
        w,
        h,
        u.iter().map(|&x| x as f32).collect(),
        v.iter().map(|&x| x as f32).collect(),
    )?;
    Ok(FlowEstimate { field, update_norms: norms })
}

/// `I1(x + u, y + v)`, bilinear with clamped borders.
fn warp(img: &Map, u: &[f64], v: &[f64]) -> Map {
    let (w, h) = (img.width(), img.height());
    if u.iter().chain(v).all(|&x| x == 0.0) {
        return img.clone();
    }
    Map::from_fn(w, h, |x, y| {
        let i = y * w + x;
        sample_clamped(img.data(), w, h, x as f64 + u[i], y as f64 + v[i])
    })
}

type LevelSolution = (Vec<f64>, Vec<f64>, Vec<f64>);

fn solve_level(i0: &Map, i1: &Map, params: &HornSchunck) -> Result<LevelSolution> {
    let (w, h) = (i0.width(), i0.height());
    let at = |m: &Map, x: isize, y: isize| {
        m.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize)
    };
    let n = w * h;
    let (mut ix, mut iy, mut it) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let dx = |m: &Map| 0.5 * (at(m, x + 1, y) - at(m, x - 1, y));
            let dy = |m: &Map| 0.5 * (at(m, x, y + 1) - at(m, x, y - 1));
            ix[i] = 0.5 * (dx(i0) + dx(i1));
            iy[i] = 0.5 * (dy(i0) + dy(i1));
            it[i] = at(i1, x, y) - at(i0, x, y);
        }
    }
    let lambda = params.smoothness;
    let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
    let (mut nu, mut nv) = (vec![0.0; n], vec![0.0; n]);
    let mut norms = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        let mut change = 0.0;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let ubar = neighbourhood_mean(&u, w, h, x, y);
                let vbar = neighbourhood_mean(&v, w, h, x, y);
                let t = (ix[i] * ubar + iy[i] * vbar + it[i]) / (lambda + ix[i] * ix[i] + iy[i] * iy[i]);
                nu[i] = ubar - ix[i] * t;
                nv[i] = vbar - iy[i] * t;
                change += (nu[i] - u[i]).powi(2) + (nv[i] - v[i]).powi(2);
            }
        }
        std::mem::swap(&mut u, &mut nu);
        std::mem::swap(&mut v, &mut nv);
        if !change.is_finite() {
            return Err(Error::NonFinite("Horn-Schunck iteration diverged".into()));
        }
        norms.push(change.sqrt());
    }
    Ok((u, v, norms))
}

/// Horn–Schunck averaging kernel: 1/6 on edge neighbours, 1/12 on diagonals.
/// Clamped borders keep the operator symmetric and doubly stochastic.
#[inline]
fn neighbourhood_mean(a: &[f64], w: usize, h: usize, x: usize, y: usize) -> f64 {
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(w - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(h - 1);
    let g = |xx: usize, yy: usize| a[yy * w + xx];
    (g(xm, y) + g(xp, y) + g(x, ym) + g(x, yp)) / 6.0
        + (g(xm, ym) + g(xp, ym) + g(xm, yp) + g(xp, yp)) / 12.0
}
