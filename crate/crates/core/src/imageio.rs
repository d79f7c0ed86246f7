//! Frame and map file I/O: PNG/PPM frames, 8-bit PGM heatmaps, raw f32 arrays.
//!
//! Raw arrays are `channels, height, width` as u32 LE followed by row-major
//! f32 LE values.

use std::path::Path;

use image::{ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::map::Map;
use crate::tensor::Tensor;

/// Reads an RGB frame as a `(3, H, W)` tensor with values in [0, 1].
pub fn read_rgb(path: &Path) -> Result<Tensor<f64>> {
    let img = image::open(path).map_err(|e| Error::Image { path: path.into(), source: e })?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut data = vec![0.0; 3 * w * h];
    for (x, y, px) in rgb.enumerate_pixels() {
        for c in 0..3 {
            data[c * w * h + y as usize * w + x as usize] = px[c] as f64 / 255.0;
        }
    }
    Tensor::from_vec(&[3, h, w], data)
}

/// Writes a `(3, H, W)` tensor in [0, 1] as an 8-bit RGB PNG.
pub fn write_rgb_png(path: &Path, t: &Tensor<f64>) -> Result<()> {
    let (_, c, h, w) = t.nchw()?;
    if c != 3 {
        return Err(Error::Shape(format!("RGB image needs 3 channels, got {c}")));
    }
    let img = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let at = |ch: usize| {
            let v = t.plane(0, ch)[y as usize * w + x as usize];
            (v.clamp(0.0, 1.0) * 255.0).round() as u8
        };
        Rgb([at(0), at(1), at(2)])
    });
    img.save(path).map_err(|e| Error::Image { path: path.into(), source: e })
}

/// Writes a `(3, H, W)` tensor in [0, 1] as a 16-bit RGB PNG.
pub fn write_rgb16_png(path: &Path, t: &Tensor<f64>) -> Result<()> {
    let (_, c, h, w) = t.nchw()?;
    if c != 3 {
        return Err(Error::Shape(format!("RGB image needs 3 channels, got {c}")));
    }
    let img: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let at = |ch: usize| {
            let v = t.plane(0, ch)[y as usize * w + x as usize];
            (v.clamp(0.0, 1.0) * 65535.0).round() as u16
        };
        Rgb([at(0), at(1), at(2)])
    });
    img.save(path).map_err(|e| Error::Image { path: path.into(), source: e })
}

/// Min-max normalized 8-bit binary PGM. A constant map encodes as all zeros.
pub fn pgm_bytes(map: &Map) -> Vec<u8> {
    let (lo, hi) = (map.min(), map.max());
    let range = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend(map.data().iter().map(|&v| {
        if range > 0.0 {
            ((v - lo) / range * 255.0).round() as u8
        } else {
            0
        }
    }));
    out
}

pub fn write_pgm(path: &Path, map: &Map) -> Result<()> {
    std::fs::write(path, pgm_bytes(map)).map_err(|e| Error::io(path, e))
}

pub fn raw_bytes(channels: usize, height: usize, width: usize, data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * data.len());
    for d in [channels, height, width] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn write_raw_map(path: &Path, map: &Map) -> Result<()> {
    let bytes = raw_bytes(1, map.height(), map.width(), map.data());
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_raw_tensor(path: &Path, t: &Tensor<f64>) -> Result<()> {
    let (_, c, h, w) = t.nchw()?;
    std::fs::write(path, raw_bytes(c, h, w, t.data())).map_err(|e| Error::io(path, e))
}

/// Reads a raw array as a `(C, H, W)` tensor.
pub fn read_raw(path: &Path) -> Result<Tensor<f64>> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if buf.len() < 12 {
        return Err(Error::format(path, "truncated raw header"));
    }
    let dim = |i: usize| u32::from_le_bytes(buf[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    if c == 0 || h == 0 || w == 0 || buf.len() != 12 + 4 * c * h * w {
        return Err(Error::format(
            path,
            format!("raw header {c}x{h}x{w} does not match {} payload bytes", buf.len() - 12),
        ));
    }
    let data = buf[12..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Tensor::from_vec(&[c, h, w], data)
}

pub fn read_raw_map(path: &Path) -> Result<Map> {
    let t = read_raw(path)?;
    if t.dims()[0] != 1 {
        return Err(Error::format(path, format!("expected 1 channel, found {}", t.dims()[0])));
    }
    Map::from_tensor(&t)
}
