//! Seeded toy videos: a bright disc drifting over a smooth textured
//! background, watched by simulated subjects who fixate near the disc.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::fixations::{fixations_csv_text, Fixation, FixationSet};
use crate::data::source::FrameSource;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::imageio::write_rgb_png;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub subjects: usize,
    /// Disc radius in pixels.
    pub radius: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig { width: 80, height: 60, frames: 5, subjects: 4, radius: 7.0 }
    }
}

/// One rendered frame with its true flow (the disc displacement inside the
/// disc, zero elsewhere) and fixations.
#[derive(Debug, Clone)]
pub struct SceneFrame {
    pub appearance: Tensor<f64>,
    pub flow: FlowField,
    pub fixations: Vec<Fixation>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub config: SceneConfig,
    pub frames: Vec<SceneFrame>,
}

fn coverage(x: f64, y: f64, cx: f64, cy: f64, r: f64) -> f64 {
    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
    (r + 0.5 - d).clamp(0.0, 1.0)
}

pub fn render_scene(cfg: &SceneConfig, seed: u64) -> Result<Scene> {
    let (w, h, r) = (cfg.width, cfg.height, cfg.radius);
    if w < 4 || h < 4 || !(r > 0.0) || 2.0 * r + 2.0 > w.min(h) as f64 {
        return Err(Error::Spec(format!("scene {w}x{h} cannot hold a disc of radius {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>() * std::f64::consts::TAU);
    let disc_rgb: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.75..1.0));
    let (lo_x, hi_x, lo_y, hi_y) = (r + 1.0, w as f64 - r - 2.0, r + 1.0, h as f64 - r - 2.0);
    let mut pos = (rng.random_range(lo_x..=hi_x), rng.random_range(lo_y..=hi_y));
    let angle = rng.random::<f64>() * std::f64::consts::TAU;
    let speed = rng.random_range(1.0..2.0);
    let mut vel = (speed * angle.cos(), speed * angle.sin());
    let gaze = Normal::new(0.0, r / 2.0).expect("positive std");

    let mut frames = Vec::with_capacity(cfg.frames);
    for _ in 0..cfg.frames {
        let (cx, cy) = pos;
        let mut next = (cx + vel.0, cy + vel.1);
        if !(lo_x..=hi_x).contains(&next.0) {
            vel.0 = -vel.0;
            next.0 = cx + vel.0;
        }
        if !(lo_y..=hi_y).contains(&next.1) {
            vel.1 = -vel.1;
            next.1 = cy + vel.1;
        }
        let appearance = Tensor::from_fn(&[3, h, w], |i| {
            let (c, y, x) = (i / (w * h), (i / w) % h, i % w);
            let (xf, yf) = (x as f64 / w as f64, y as f64 / h as f64);
            let bg = 0.35
                + 0.12 * (std::f64::consts::TAU * 2.0 * xf + phase[c]).sin()
                + 0.12 * (std::f64::consts::TAU * 1.5 * yf + phase[c + 3]).cos();
            let a = coverage(x as f64, y as f64, cx, cy, r);
            bg * (1.0 - a) + disc_rgb[c] * a
        });
        let n = w * h;
        let mut u = vec![0.0f32; n];
        let mut v = vec![0.0f32; n];
        for y in 0..h {
            for x in 0..w {
                if coverage(x as f64, y as f64, cx, cy, r) > 0.5 {
                    u[y * w + x] = (next.0 - cx) as f32;
                    v[y * w + x] = (next.1 - cy) as f32;
                }
            }
        }
        let fixations = (0..cfg.subjects)
            .map(|s| {
                let fx = (cx + gaze.sample(&mut rng)).clamp(0.0, w as f64 - 1.0);
                let fy = (cy + gaze.sample(&mut rng)).clamp(0.0, h as f64 - 1.0);
                Fixation::new(fx, fy, s as u32)
            })
            .collect();
        frames.push(SceneFrame { appearance, flow: FlowField::new(w, h, u, v)?, fixations });
        pos = next;
    }
    Ok(Scene { config: *cfg, frames })
}

/// Frame sources straight from a rendered scene, using the true flow.
pub fn scene_sources(scene: &Scene, video: &str) -> Result<Vec<FrameSource>> {
    scene
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| FrameSource::new(video, i, f.appearance.clone(), f.flow.clone(), f.fixations.clone()))
        .collect()
}

/// Writes `videos` toy videos under `root` in the dataset layout, named
/// `video_000`, `video_001`, ... Frame `i` is stored as `%06d.png`.
pub fn write_toy_dataset(root: &Path, videos: usize, cfg: &SceneConfig, seed: u64) -> Result<()> {
    for vi in 0..videos {
        let scene = render_scene(cfg, seed.wrapping_add(vi as u64))?;
        let dir = root.join(format!("video_{vi:03}"));
        let frames_dir = dir.join("frames");
        std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
        let mut sets = vec![];
        for (i, f) in scene.frames.iter().enumerate() {
            write_rgb_png(&frames_dir.join(format!("{i:06}.png")), &f.appearance)?;
            sets.push(FixationSet::new(i, f.fixations.clone()));
        }
        let csv = dir.join("fixations.csv");
        std::fs::write(&csv, fixations_csv_text(&sets)).map_err(|e| Error::io(&csv, e))?;
    }
    Ok(())
}
