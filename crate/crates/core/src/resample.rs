//! Align-corners bilinear resampling.
//!
//! Destination pixel `x'` samples the source at `x' * (W - 1) / (W' - 1)`, so
//! the four corners map onto the source corners exactly. Interpolation is
//! written as `a + t * (b - a)`, which reproduces constant inputs bit-exactly.

use crate::error::{Error, Result};
use crate::map::Map;
use crate::tensor::Tensor;

fn axis(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            let pos = if dst == 1 || src == 1 {
                0.0
            } else {
                i as f64 * (src - 1) as f64 / (dst - 1) as f64
            };
            let i0 = (pos.floor() as usize).min(src - 1);
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + t * (b - a)
    }
}

/// Resizes one `w × h` plane to `nw × nh`.
pub fn resize_plane(src: &[f64], w: usize, h: usize, nw: usize, nh: usize) -> Result<Vec<f64>> {
    if nw == 0 || nh == 0 {
        return Err(Error::Geometry(format!("resize target {nw}x{nh} must be positive")));
    }
    if src.len() != w * h || w == 0 || h == 0 {
        return Err(Error::Shape(format!("plane of {} values is not {w}x{h}", src.len())));
    }
    let ax = axis(w, nw);
    let ay = axis(h, nh);
    let mut out = Vec::with_capacity(nw * nh);
    for &(y0, y1, ty) in &ay {
        let (r0, r1) = (&src[y0 * w..][..w], &src[y1 * w..][..w]);
        for &(x0, x1, tx) in &ax {
            let top = lerp(r0[x0], r0[x1], tx);
            let bottom = lerp(r1[x0], r1[x1], tx);
            out.push(lerp(top, bottom, ty));
        }
    }
    Ok(out)
}

pub fn resize_map(m: &Map, nw: usize, nh: usize) -> Result<Map> {
    Map::from_vec(nw, nh, resize_plane(m.data(), m.width(), m.height(), nw, nh)?)
}

/// Resizes every channel plane of a rank-3 or rank-4 image tensor.
pub fn resize_image(t: &Tensor<f64>, nw: usize, nh: usize) -> Result<Tensor<f64>> {
    let (n, c, h, w) = t.nchw()?;
    let mut data = Vec::with_capacity(n * c * nw * nh);
    for b in 0..n {
        for ch in 0..c {
            data.extend(resize_plane(t.plane(b, ch), w, h, nw, nh)?);
        }
    }
    Tensor::from_vec(&t.image_dims_like(n, c, nh, nw), data)
}

/// Bilinear sample at fractional coordinates with edge clamping.
pub fn sample_clamped(src: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (tx, ty) = (x - x0 as f64, y - y0 as f64);
    let top = lerp(src[y0 * w + x0], src[y0 * w + x1], tx);
    let bottom = lerp(src[y1 * w + x0], src[y1 * w + x1], tx);
    lerp(top, bottom, ty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stays_constant() {
        let src = vec![0.3; 7 * 5];
        let out = resize_plane(&src, 7, 5, 13, 3).unwrap();
        assert!(out.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn checkerboard_corners_preserved() {
        let src = vec![0.0, 1.0, 1.0, 0.0];
        let out = resize_plane(&src, 2, 2, 4, 4).unwrap();
        assert_eq!(out[0], 0.0);
        assert_eq!(out[3], 1.0);
        assert_eq!(out[12], 1.0);
        assert_eq!(out[15], 0.0);
        // interior sample at (1/3, 1/3): bilinear arithmetic by hand
        let t = 1.0 / 3.0;
        let top = t;
        let bottom = 1.0 - t;
        assert!((out[5] - (top + t * (bottom - top))).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_target() {
        assert!(matches!(resize_plane(&[1.0], 1, 1, 0, 3), Err(Error::Geometry(_))));
    }

    #[test]
    fn same_size_is_identity() {
        let src: Vec<f64> = (0..20).map(|i| (i as f64).sqrt()).collect();
        assert_eq!(resize_plane(&src, 5, 4, 5, 4).unwrap(), src);
    }
}
