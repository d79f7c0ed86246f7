//! Per-frame inputs at network input size, prior to augmentation.

use crate::data::dataset::{Dataset, Video};
use crate::data::density::{default_sigma, density_from_fixations};
use crate::data::fixations::Fixation;
use crate::data::sample::{Provenance, Sample};
use crate::error::{Error, Result};
use crate::flow::{estimate_flow, flow_to_image, read_flo, resize_flow, to_gray, FlowField, HornSchunck};
use crate::imageio::read_rgb;
use crate::par;
use crate::resample::resize_image;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub input_width: usize,
    pub input_height: usize,
    pub clip_bound: f64,
    /// KDE bandwidth in input pixels; `None` means `input_width / 32`.
    pub kde_sigma: Option<f64>,
    pub flow: HornSchunck,
}

impl SampleConfig {
    pub fn new(input_width: usize, input_height: usize) -> Self {
        SampleConfig {
            input_width,
            input_height,
            clip_bound: crate::flow::DEFAULT_CLIP_BOUND,
            kde_sigma: None,
            flow: HornSchunck::default(),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.kde_sigma.unwrap_or_else(|| default_sigma(self.input_width))
    }
}

/// A frame, its raw flow field and its fixations, all at network input size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSource {
    pub video: String,
    pub frame: usize,
    appearance: Tensor<f64>,
    flow: FlowField,
    fixations: Vec<Fixation>,
}

impl FrameSource {
    pub fn new(
        video: impl Into<String>,
        frame: usize,
        appearance: Tensor<f64>,
        flow: FlowField,
        fixations: Vec<Fixation>,
    ) -> Result<Self> {
        let (h, w) = (flow.height(), flow.width());
        if appearance.dims() != [3, h, w] {
            return Err(Error::Shape(format!(
                "frame dims {:?} do not match the {w}x{h} flow field",
                appearance.dims()
            )));
        }
        Ok(FrameSource { video: video.into(), frame, appearance, flow, fixations })
    }

    pub fn appearance(&self) -> &Tensor<f64> {
        &self.appearance
    }

    pub fn flow(&self) -> &FlowField {
        &self.flow
    }

    pub fn fixations(&self) -> &[Fixation] {
        &self.fixations
    }

    pub fn width(&self) -> usize {
        self.flow.width()
    }

    pub fn height(&self) -> usize {
        self.flow.height()
    }

    /// The unaugmented sample.
    pub fn original(&self, cfg: &SampleConfig) -> Result<Sample> {
        let target = density_from_fixations(&self.fixations, self.width(), self.height(), cfg.sigma())?;
        let flow_image = flow_to_image(&self.flow, cfg.clip_bound)?.tensor;
        Sample::new(&self.video, self.frame, Provenance::Original, self.appearance.clone(), flow_image, target)
    }
}

fn load_frame(video: &Video, pos: usize, cfg: &SampleConfig) -> Result<Tensor<f64>> {
    let rgb = read_rgb(&video.frames[pos].path)?;
    let (_, _, h, w) = rgb.nchw()?;
    if (w, h) != (video.width, video.height) {
        return Err(Error::Data(format!(
            "{} is {w}x{h}, the video's first frame is {}x{}",
            video.frames[pos].path.display(),
            video.width,
            video.height
        )));
    }
    resize_image(&rgb, cfg.input_width, cfg.input_height)
}

/// Flow for frame `pos`: its `.flo` file resized to input size, else
/// Horn–Schunck towards the next frame (from the previous frame for the
/// last one; zero for single-frame videos).
fn frame_flow(video: &Video, frames: &[Tensor<f64>], pos: usize, cfg: &SampleConfig) -> Result<FlowField> {
    if let Some(flo) = &video.frames[pos].flow {
        return resize_flow(&read_flo(flo)?, cfg.input_width, cfg.input_height);
    }
    let (a, b) = match frames.len() {
        1 => return Ok(FlowField::zeros(cfg.input_width, cfg.input_height)),
        n if pos + 1 < n => (pos, pos + 1),
        _ => (pos - 1, pos),
    };
    Ok(estimate_flow(&to_gray(&frames[a])?, &to_gray(&frames[b])?, &cfg.flow)?.field)
}

/// Sources for every frame of `video` (only frames with fixations when
/// `ground_truth_only`), with fixations mapped into input coordinates.
pub fn video_sources(video: &Video, cfg: &SampleConfig, ground_truth_only: bool) -> Result<Vec<FrameSource>> {
    let frames = par::map_range(video.frames.len(), |i| load_frame(video, i, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let wanted: Vec<usize> = (0..video.frames.len())
        .filter(|&i| !ground_truth_only || video.has_ground_truth(video.frames[i].index))
        .collect();
    par::map_slice(&wanted, |&pos| {
        let index = video.frames[pos].index;
        let flow = frame_flow(video, &frames, pos, cfg)?;
        let fixations = video
            .fixations_of(index)
            .map(|s| {
                s.rescaled((video.width, video.height), (cfg.input_width, cfg.input_height))
                    .points
            })
            .unwrap_or_default();
        FrameSource::new(&video.name, index, frames[pos].clone(), flow, fixations)
    })
    .into_iter()
    .collect()
}

pub fn dataset_sources(dataset: &Dataset, cfg: &SampleConfig, ground_truth_only: bool) -> Result<Vec<FrameSource>> {
    let mut out = vec![];
    for v in &dataset.videos {
        out.extend(video_sources(v, cfg, ground_truth_only)?);
    }
    Ok(out)
}
