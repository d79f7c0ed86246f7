//! Eye fixations and the `frame,x,y,subject` CSV schema.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixation {
    /// Horizontal position in pixels of the reference resolution.
    pub x: f64,
    pub y: f64,
    pub subject: u32,
}

impl Fixation {
    pub fn new(x: f64, y: f64, subject: u32) -> Self {
        Fixation { x, y, subject }
    }

    /// Pixel containing the fixation, clamped into a `width × height` grid.
    pub fn pixel(&self, width: usize, height: usize) -> (usize, usize) {
        let px = (self.x.floor().max(0.0) as usize).min(width - 1);
        let py = (self.y.floor().max(0.0) as usize).min(height - 1);
        (px, py)
    }

    /// The same gaze point in a grid rescaled from `from` to `to` (width, height).
    pub fn rescaled(&self, from: (usize, usize), to: (usize, usize)) -> Fixation {
        Fixation {
            x: self.x * to.0 as f64 / from.0 as f64,
            y: self.y * to.1 as f64 / from.1 as f64,
            subject: self.subject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixationSet {
    pub frame_index: usize,
    pub points: Vec<Fixation>,
}

impl FixationSet {
    pub fn new(frame_index: usize, points: Vec<Fixation>) -> Self {
        FixationSet { frame_index, points }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        for p in &self.points {
            if !(p.x >= 0.0 && p.x < width as f64 && p.y >= 0.0 && p.y < height as f64) {
                return Err(Error::Data(format!(
                    "fixation ({}, {}) of frame {} lies outside the {width}x{height} frame",
                    p.x, p.y, self.frame_index
                )));
            }
        }
        Ok(())
    }

    pub fn rescaled(&self, from: (usize, usize), to: (usize, usize)) -> FixationSet {
        FixationSet {
            frame_index: self.frame_index,
            points: self.points.iter().map(|p| p.rescaled(from, to)).collect(),
        }
    }
}

pub const CSV_HEADER: &str = "frame,x,y,subject";

/// Parses fixation CSV text; `path` names the source in errors, which carry
/// 1-based line numbers.
pub fn parse_fixations_csv(text: &str, path: &Path) -> Result<BTreeMap<usize, FixationSet>> {
    let mut out: BTreeMap<usize, FixationSet> = BTreeMap::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Ok(out),
        Some((_, h)) if h.trim().replace(' ', "") == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(Error::format(path, format!("line 1: expected header {CSV_HEADER:?}, got {h:?}")));
        }
    }
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(path, format!("line {}: {what} in {line:?}", i + 1));
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(bad("expected 4 columns"));
        }
        let frame: usize = cols[0].parse().map_err(|_| bad("bad frame index"))?;
        let x: f64 = cols[1].parse().map_err(|_| bad("bad x"))?;
        let y: f64 = cols[2].parse().map_err(|_| bad("bad y"))?;
        let subject: u32 = cols[3].parse().map_err(|_| bad("bad subject id"))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(bad("non-finite coordinate"));
        }
        out.entry(frame)
            .or_insert_with(|| FixationSet::new(frame, vec![]))
            .points
            .push(Fixation::new(x, y, subject));
    }
    Ok(out)
}

pub fn read_fixations_csv(path: &Path) -> Result<BTreeMap<usize, FixationSet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fixations_csv(&text, path)
}

pub fn fixations_csv_text<'a>(sets: impl IntoIterator<Item = &'a FixationSet>) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for set in sets {
        for p in &set.points {
            s.push_str(&format!("{},{},{},{}\n", set.frame_index, p.x, p.y, p.subject));
        }
    }
    s
}
