//! Dataset index over the `root/<video>/frames/%06d.png` layout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::fixations::{read_fixations_csv, FixationSet};
use crate::error::{Error, Result};

const FRAME_EXTENSIONS: [&str; 3] = ["png", "ppm", "pnm"];

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub path: PathBuf,
    /// Precomputed flow to the next frame, if a `.flo` file exists.
    pub flow: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub name: String,
    pub dir: PathBuf,
    /// Sorted by index.
    pub frames: Vec<Frame>,
    pub width: usize,
    pub height: usize,
    pub fixations: BTreeMap<usize, FixationSet>,
}

impl Video {
    pub fn fixations_of(&self, frame: usize) -> Option<&FixationSet> {
        self.fixations.get(&frame).filter(|s| !s.is_empty())
    }

    pub fn has_ground_truth(&self, frame: usize) -> bool {
        self.fixations_of(frame).is_some()
    }

    /// Frames without any fixation.
    pub fn frames_without_ground_truth(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.index).filter(|&i| !self.has_ground_truth(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    /// Sorted by name.
    pub videos: Vec<Video>,
}

impl Dataset {
    pub fn frame_count(&self) -> usize {
        self.videos.iter().map(|v| v.frames.len()).sum()
    }

    pub fn video(&self, name: &str) -> Option<&Video> {
        self.videos.iter().find(|v| v.name == name)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = vec![];
    for e in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(e.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn frame_index(path: &Path) -> Option<usize> {
    path.file_stem()?.to_str()?.parse().ok()
}

fn load_video(dir: &Path) -> Result<Video> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Data(format!("video directory {} has no UTF-8 name", dir.display())))?
        .to_string();
    let frames_dir = dir.join("frames");
    if !frames_dir.is_dir() {
        return Err(Error::Data(format!("missing frames directory {}", frames_dir.display())));
    }
    let flow_dir = dir.join("flow");
    let mut frames = vec![];
    for path in sorted_entries(&frames_dir)? {
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if !ext_ok {
            continue;
        }
        let index = frame_index(&path)
            .ok_or_else(|| Error::Data(format!("frame file {} is not named by its index", path.display())))?;
        let flo = flow_dir.join(format!("{index:06}.flo"));
        frames.push(Frame { index, path, flow: flo.is_file().then_some(flo) });
    }
    frames.sort_by_key(|f| f.index);
    if let Some(w) = frames.windows(2).find(|w| w[0].index == w[1].index) {
        return Err(Error::Data(format!("duplicate frame index {} in {}", w[0].index, frames_dir.display())));
    }
    let first = frames
        .first()
        .ok_or_else(|| Error::Data(format!("no frames in {}", frames_dir.display())))?;
    let (width, height) = image::image_dimensions(&first.path).map_err(|e| Error::Image {
        path: first.path.clone(),
        source: e,
    })?;
    let (width, height) = (width as usize, height as usize);

    let csv = dir.join("fixations.csv");
    let fixations = if csv.is_file() { read_fixations_csv(&csv)? } else { BTreeMap::new() };
    for (idx, set) in &fixations {
        if frames.binary_search_by_key(idx, |f| f.index).is_err() {
            return Err(Error::Data(format!("{}: fixations reference missing frame {idx}", csv.display())));
        }
        set.validate(width, height)
            .map_err(|e| Error::Data(format!("{}: {e}", csv.display())))?;
    }
    Ok(Video { name, dir: dir.to_path_buf(), frames, width, height, fixations })
}

/// Indexes every video directory under `root`, in lexicographic order.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(Error::Data(format!("dataset root {} is not a directory", root.display())));
    }
    let videos = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .map(|p| load_video(&p))
        .collect::<Result<Vec<_>>>()?;
    if videos.is_empty() {
        return Err(Error::Data(format!("no video directories under {}", root.display())));
    }
    Ok(Dataset { root: root.to_path_buf(), videos })
}
