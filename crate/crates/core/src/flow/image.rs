//! Three-channel flow images fed to the temporal stream.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::tensor::Tensor;

pub const DEFAULT_CLIP_BOUND: f64 = 20.0;

/// `(u, v, |(u, v)|)` mapped into [0, 1]; see [`flow_to_image`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowImage {
    /// `(3, H, W)`.
    pub tensor: Tensor<f64>,
    pub clip_bound: f64,
}

/// Channel 0: `(clip(u, -B, B) + B) / 2B`, channel 1 likewise for `v`,
/// channel 2: `min(√(u²+v²), B√2) / (B√2)` with the magnitude taken before clipping.
pub fn flow_to_image(field: &FlowField, clip_bound: f64) -> Result<FlowImage> {
    if !(clip_bound > 0.0 && clip_bound.is_finite()) {
        return Err(Error::Spec(format!("clip bound must be > 0, got {clip_bound}")));
    }
    let b = clip_bound;
    let mag_max = b * std::f64::consts::SQRT_2;
    let n = field.width() * field.height();
    let mut data = vec![0.0; 3 * n];
    for (i, (&u, &v)) in field.u().iter().zip(field.v()).enumerate() {
        let (u, v) = (u as f64, v as f64);
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::NonFinite(format!("flow at pixel {i} is ({u}, {v})")));
        }
        data[i] = (u.clamp(-b, b) + b) / (2.0 * b);
        data[n + i] = (v.clamp(-b, b) + b) / (2.0 * b);
        data[2 * n + i] = (u * u + v * v).sqrt().min(mag_max) / mag_max;
    }
    Ok(FlowImage { tensor: Tensor::from_vec(&[3, field.height(), field.width()], data)?, clip_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(field: &FlowField, b: f64) -> [f64; 3] {
        let img = flow_to_image(field, b).unwrap();
        [img.tensor.data()[0], img.tensor.data()[1], img.tensor.data()[2]]
    }

    #[test]
    fn zero_flow() {
        assert_eq!(px(&FlowField::zeros(1, 1), 20.0), [0.5, 0.5, 0.0]);
    }

    #[test]
    fn bound_flow() {
        let p = px(&FlowField::constant(1, 1, 20.0, 0.0), 20.0);
        assert_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.5);
        assert!((p[2] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clipping() {
        let p = px(&FlowField::constant(1, 1, -40.0, 0.0), 20.0);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[2], 1.0);
    }

    #[test]
    fn bad_bound() {
        assert!(flow_to_image(&FlowField::zeros(1, 1), 0.0).is_err());
    }
}
