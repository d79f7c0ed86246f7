//! Fixation density maps via isotropic Gaussian kernel density estimation.

use crate::data::fixations::Fixation;
use crate::error::{Error, Result};
use crate::map::Map;
use crate::resample::resize_map;

/// Kernels are cut off at this many standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

/// Nonnegative map summing to 1, or all zeros when there is no fixation.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap(Map);

impl DensityMap {
    /// Normalizes `map` to unit sum; an all-zero map stays zero.
    pub fn normalized(map: Map) -> Result<Self> {
        if map.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Data("density map has negative or non-finite entries".into()));
        }
        let total = map.sum();
        if total == 0.0 {
            return Ok(DensityMap(map));
        }
        Ok(DensityMap(map.map(|v| v / total)))
    }

    /// Accepts a map read back from disk as is, checking the invariant
    /// instead of renormalizing so values round-trip exactly.
    pub(crate) fn stored(map: Map, path: &std::path::Path) -> Result<Self> {
        let total = map.sum();
        let valid = map.data().iter().all(|&v| v >= 0.0 && v.is_finite()) && (total == 0.0 || (total - 1.0).abs() < 1e-6);
        if !valid {
            return Err(Error::format(path, "stored density map is not a normalized nonnegative map"));
        }
        Ok(DensityMap(map))
    }

    pub fn map(&self) -> &Map {
        &self.0
    }

    pub fn into_map(self) -> Map {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    /// Bilinear resize followed by renormalization.
    pub fn resized(&self, width: usize, height: usize) -> Result<Self> {
        DensityMap::normalized(resize_map(&self.0, width, height)?)
    }
}

/// Default bandwidth: one 32nd of the map width.
pub fn default_sigma(width: usize) -> f64 {
    width as f64 / 32.0
}

/// Sum of isotropic Gaussians centred on the fixations (evaluated at pixel
/// coordinates, truncated at 4σ), normalized to unit sum.
pub fn density_from_fixations(fixations: &[Fixation], width: usize, height: usize, sigma: f64) -> Result<DensityMap> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Spec(format!("KDE sigma must be > 0, got {sigma}")));
    }
    let mut m = Map::zeros(width, height);
    let reach = TRUNCATION_SIGMAS * sigma;
    let inv = 1.0 / (2.0 * sigma * sigma);
    for f in fixations {
        let x0 = (f.x - reach).ceil().max(0.0) as usize;
        let y0 = (f.y - reach).ceil().max(0.0) as usize;
        let x1 = ((f.x + reach).floor() as isize).min(width as isize - 1);
        let y1 = ((f.y + reach).floor() as isize).min(height as isize - 1);
        if x1 < 0 || y1 < 0 {
            continue;
        }
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                let d2 = (x as f64 - f.x).powi(2) + (y as f64 - f.y).powi(2);
                if d2 <= reach * reach {
                    let v = m.get(x, y) + (-d2 * inv).exp();
                    m.set(x, y, v);
                }
            }
        }
    }
    DensityMap::normalized(m)
}
