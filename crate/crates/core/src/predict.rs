//! Running a trained model over frames and writing saliency maps.

use std::path::{Path, PathBuf};

use crate::data::{video_sources, Dataset, SampleConfig};
use crate::error::{Error, Result};
use crate::flow::{estimate_flow, flow_to_image, resize_flow, to_gray, FlowField};
use crate::imageio::{read_rgb, write_pgm, write_raw_map};
use crate::map::Map;
use crate::metrics::prediction_path;
use crate::nets::Model;
use crate::resample::resize_image;
use crate::tensor::Real;

/// Saliency for one frame at network input size. `flow` is the raw field
/// at any resolution; it is resized to the input size.
pub fn predict_frame<T: Real>(
    model: &Model<T>,
    frame: &crate::Tensor<f64>,
    flow: &FlowField,
    cfg: &SampleConfig,
) -> Result<Map> {
    let (w, h) = (cfg.input_width, cfg.input_height);
    let appearance = resize_image(frame, w, h)?;
    let flow_image = if model.spec.variant.needs_flow() {
        Some(flow_to_image(&resize_flow(flow, w, h)?, cfg.clip_bound)?.tensor)
    } else {
        None
    };
    model.predict_map(&appearance, flow_image.as_ref())
}

/// Saliency for a frame file and either the next frame or a `.flo` file.
pub fn predict_files<T: Real>(
    model: &Model<T>,
    frame: &Path,
    next: Option<&Path>,
    flo: Option<&Path>,
    cfg: &SampleConfig,
) -> Result<Map> {
    let rgb = read_rgb(frame)?;
    let flow = match (next, flo) {
        (_, Some(f)) => crate::flow::read_flo(f)?,
        (Some(n), None) => {
            let (w, h) = (cfg.input_width, cfg.input_height);
            let a = to_gray(&resize_image(&rgb, w, h)?)?;
            let b = to_gray(&resize_image(&read_rgb(n)?, w, h)?)?;
            estimate_flow(&a, &b, &cfg.flow)?.field
        }
        (None, None) if model.spec.variant.needs_flow() => {
            return Err(Error::Spec(format!(
                "{} needs either a next frame or a .flo file",
                model.spec.variant
            )));
        }
        (None, None) => FlowField::zeros(cfg.input_width, cfg.input_height),
    };
    predict_frame(model, &rgb, &flow, cfg)
}

/// Writes `<stem>.raw` and `<stem>.pgm`.
pub fn write_prediction(map: &Map, raw_path: &Path) -> Result<()> {
    if let Some(dir) = raw_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_raw_map(raw_path, map)?;
    write_pgm(&raw_path.with_extension("pgm"), map)
}

/// Predicts every frame of `dataset` into `out_dir` using the layout
/// [`prediction_path`] describes. Returns the raw map paths in order.
pub fn predict_dataset<T: Real>(
    model: &Model<T>,
    dataset: &Dataset,
    cfg: &SampleConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = vec![];
    for video in &dataset.videos {
        for src in video_sources(video, cfg, false)? {
            let sample = src.original(cfg)?;
            let flow = model.spec.variant.needs_flow().then(|| sample.flow_image());
            let map = model.predict_map(sample.appearance(), flow)?;
            let path = prediction_path(out_dir, &video.name, src.frame);
            write_prediction(&map, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
