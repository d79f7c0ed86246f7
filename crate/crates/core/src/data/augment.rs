//! Multi-resolution augmentation: every frame also yields ×1/2 and ×1/4
//! variants restored to the network input size.

use crate::data::density::density_from_fixations;
use crate::data::sample::{Provenance, Sample};
use crate::data::source::{FrameSource, SampleConfig};
use crate::error::Result;
use crate::flow::{flow_to_image, rescale_flow, FlowField};
use crate::par;
use crate::resample::resize_image;
use crate::tensor::Tensor;

/// Frame and flow field downsampled by the provenance factor; flow vectors
/// are scaled by the same factor.
pub fn downscaled_inputs(src: &FrameSource, provenance: Provenance) -> Result<(Tensor<f64>, FlowField)> {
    let flow = rescale_flow(src.flow(), provenance.factor())?;
    let appearance = resize_image(src.appearance(), flow.width(), flow.height())?;
    Ok((appearance, flow))
}

pub fn augmented_sample(src: &FrameSource, provenance: Provenance, cfg: &SampleConfig) -> Result<Sample> {
    if provenance == Provenance::Original {
        return src.original(cfg);
    }
    let (w, h) = (src.width(), src.height());
    let (small, flow) = downscaled_inputs(src, provenance)?;
    let flow_image = flow_to_image(&flow, cfg.clip_bound)?.tensor;
    let target = density_from_fixations(src.fixations(), w, h, cfg.sigma())?;
    Sample::new(
        &src.video,
        src.frame,
        provenance,
        resize_image(&small, w, h)?,
        resize_image(&flow_image, w, h)?,
        target,
    )
}

/// Three samples per source (original, half, quarter), in source order.
pub fn augment_multiscale(sources: &[FrameSource], cfg: &SampleConfig) -> Result<Vec<Sample>> {
    let jobs: Vec<(usize, Provenance)> =
        (0..sources.len()).flat_map(|i| Provenance::ALL.map(|p| (i, p))).collect();
    par::map_slice(&jobs, |&(i, p)| augmented_sample(&sources[i], p, cfg))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixations::Fixation;

    fn source() -> FrameSource {
        let app = Tensor::from_fn(&[3, 16, 16], |i| ((i % 16 + i / 16) % 2) as f64);
        let flow = FlowField::constant(16, 16, 3.0, -1.0);
        FrameSource::new("v", 0, app, flow, vec![Fixation::new(8.0, 8.0, 0)]).unwrap()
    }

    #[test]
    fn three_per_source() {
        let cfg = SampleConfig::new(16, 16);
        let out = augment_multiscale(&[source(), source()], &cfg).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(out[1].provenance, Provenance::Half);
        assert!(out.iter().all(|s| s.width() == 16 && s.height() == 16));
    }

    #[test]
    fn original_untouched() {
        let cfg = SampleConfig::new(16, 16);
        let s = source();
        let out = augment_multiscale(std::slice::from_ref(&s), &cfg).unwrap();
        assert_eq!(out[0], s.original(&cfg).unwrap());
        assert_eq!(out[0].appearance(), s.appearance());
    }

    #[test]
    fn half_flow_halved() {
        let (_, flow) = downscaled_inputs(&source(), Provenance::Half).unwrap();
        assert_eq!((flow.width(), flow.height()), (8, 8));
        assert!(flow.u().iter().all(|&u| u == 1.5));
        assert!(flow.v().iter().all(|&v| v == -0.5));
    }
}
