use crate::error::{Error, Result};
use crate::resample::resize_plane;

/// Dense per-pixel displacement `(u, v)` in pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || u.len() != width * height || v.len() != width * height {
            return Err(Error::Shape(format!(
                "flow {width}x{height} with {} u and {} v values",
                u.len(),
                v.len()
            )));
        }
        if let Some(i) = u.iter().chain(&v).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("flow value #{i} is not finite")));
        }
        Ok(FlowField { width, height, u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        FlowField { width, height, u: vec![u; width * height], v: vec![v; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    /// Anisotropic total variation `Σ |∇u|₁ + |∇v|₁` over forward differences.
    pub fn total_variation(&self) -> f64 {
        let (w, h) = (self.width, self.height);
        let tv = |a: &[f32]| -> f64 {
            let mut s = 0.0;
            for y in 0..h {
                for x in 0..w {
                    let c = a[y * w + x] as f64;
                    if x + 1 < w {
                        s += (a[y * w + x + 1] as f64 - c).abs();
                    }
                    if y + 1 < h {
                        s += (a[(y + 1) * w + x] as f64 - c).abs();
                    }
                }
            }
            s
        };
        tv(&self.u) + tv(&self.v)
    }
}

/// Resamples the field by `factor` (bilinear, align-corners) and multiplies
/// the displacements by the same factor, so vectors stay in the new pixel
/// units. Output dims are `round(W * factor)`, `round(H * factor)`.
pub fn rescale_flow(field: &FlowField, factor: f64) -> Result<FlowField> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Geometry(format!("rescale factor must be positive, got {factor}")));
    }
    let nw = (field.width as f64 * factor).round() as usize;
    let nh = (field.height as f64 * factor).round() as usize;
    if nw < 1 || nh < 1 {
        return Err(Error::Geometry(format!(
            "rescaling {}x{} by {factor} leaves no pixels",
            field.width, field.height
        )));
    }
    let resample = |a: &[f32]| -> Result<Vec<f32>> {
        let src: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let out = resize_plane(&src, field.width, field.height, nw, nh)?;
        Ok(out.into_iter().map(|x| (x * factor) as f32).collect())
    };
    FlowField::new(nw, nh, resample(&field.u)?, resample(&field.v)?)
}

/// Resamples the field to `nw × nh`, scaling `u` by `nw / W` and `v` by
/// `nh / H`. Used to bring precomputed flow to the network input size.
pub fn resize_flow(field: &FlowField, nw: usize, nh: usize) -> Result<FlowField> {
    let (sx, sy) = (nw as f64 / field.width as f64, nh as f64 / field.height as f64);
    let resample = |a: &[f32], s: f64| -> Result<Vec<f32>> {
        let src: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let out = resize_plane(&src, field.width, field.height, nw, nh)?;
        Ok(out.into_iter().map(|x| (x * s) as f32).collect())
    };
    FlowField::new(nw, nh, resample(&field.u, sx)?, resample(&field.v, sy)?)
}
