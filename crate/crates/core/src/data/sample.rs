//! Training samples and their on-disk cache format.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::data::density::DensityMap;
use crate::error::{Error, Result};
use crate::map::Map;
use crate::tensor::Tensor;

/// Resolution a sample's inputs were taken from before being restored to
/// the network input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Original,
    Half,
    Quarter,
}

impl Provenance {
    pub const ALL: [Provenance; 3] = [Provenance::Original, Provenance::Half, Provenance::Quarter];

    /// Downsampling divisor: 1, 2 or 4.
    pub fn divisor(self) -> u32 {
        match self {
            Provenance::Original => 1,
            Provenance::Half => 2,
            Provenance::Quarter => 4,
        }
    }

    pub fn factor(self) -> f64 {
        1.0 / self.divisor() as f64
    }

    pub fn from_divisor(d: u32) -> Option<Self> {
        Provenance::ALL.into_iter().find(|p| p.divisor() == d)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Original => "original",
            Provenance::Half => "half",
            Provenance::Quarter => "quarter",
        })
    }
}

/// One network input triple. All three arrays share the same spatial size.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub video: String,
    pub frame: usize,
    pub provenance: Provenance,
    appearance: Tensor<f64>,
    flow_image: Tensor<f64>,
    target: DensityMap,
}

impl Sample {
    /// `appearance` and `flow_image` are `(3, H, W)`; `target` is `W × H`.
    pub fn new(
        video: impl Into<String>,
        frame: usize,
        provenance: Provenance,
        appearance: Tensor<f64>,
        flow_image: Tensor<f64>,
        target: DensityMap,
    ) -> Result<Self> {
        let dims = [3, target.height(), target.width()];
        for (what, t) in [("appearance", &appearance), ("flow image", &flow_image)] {
            if t.dims() != dims {
                return Err(Error::Shape(format!(
                    "sample {what} has dims {:?}, expected {dims:?} to match the target",
                    t.dims()
                )));
            }
        }
        Ok(Sample { video: video.into(), frame, provenance, appearance, flow_image, target })
    }

    pub fn appearance(&self) -> &Tensor<f64> {
        &self.appearance
    }

    pub fn flow_image(&self) -> &Tensor<f64> {
        &self.flow_image
    }

    pub fn target(&self) -> &DensityMap {
        &self.target
    }

    pub fn width(&self) -> usize {
        self.target.width()
    }

    pub fn height(&self) -> usize {
        self.target.height()
    }
}

const CACHE_MAGIC: &[u8; 4] = b"SSMP";

/// Cache file of one sample: `<dir>/<video>/<frame:06>_<divisor>.bin`.
pub fn cache_path(dir: &Path, video: &str, frame: usize, provenance: Provenance) -> PathBuf {
    dir.join(video).join(format!("{frame:06}_{}.bin", provenance.divisor()))
}

/// Magic, video name, frame, divisor, H, W, then appearance, flow image and
/// target as little-endian f64.
pub fn encode_sample(s: &Sample) -> Vec<u8> {
    let (h, w) = (s.height(), s.width());
    let mut out = Vec::with_capacity(28 + s.video.len() + 8 * 7 * h * w);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&(s.video.len() as u32).to_le_bytes());
    out.extend_from_slice(s.video.as_bytes());
    for v in [s.frame as u32, s.provenance.divisor(), h as u32, w as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let values = s.appearance.data().iter().chain(s.flow_image.data()).chain(s.target.map().data());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_sample(buf: &[u8], path: &Path) -> Result<Sample> {
    let truncated = || Error::format(path, "truncated sample file");
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = buf.get(pos..pos + n).ok_or_else(truncated)?;
        pos += n;
        Ok(s)
    };
    if take(4)? != CACHE_MAGIC {
        return Err(Error::format(path, "not a sample cache file"));
    }
    let rd = |t: &[u8]| u32::from_le_bytes(t.try_into().unwrap());
    let name_len = rd(take(4)?) as usize;
    let video = String::from_utf8(take(name_len)?.to_vec()).map_err(|_| Error::format(path, "video name is not UTF-8"))?;
    let frame = rd(take(4)?) as usize;
    let divisor = rd(take(4)?);
    let provenance =
        Provenance::from_divisor(divisor).ok_or_else(|| Error::format(path, format!("bad scale divisor {divisor}")))?;
    let h = rd(take(4)?) as usize;
    let w = rd(take(4)?) as usize;
    let plane = h.checked_mul(w).ok_or_else(truncated)?;
    let mut floats = |n: usize| -> Result<Vec<f64>> {
        let bytes = take(n.checked_mul(8).ok_or_else(truncated)?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let appearance = Tensor::from_vec(&[3, h, w], floats(3 * plane)?)?;
    let flow_image = Tensor::from_vec(&[3, h, w], floats(3 * plane)?)?;
    let target = DensityMap::stored(Map::from_vec(w, h, floats(plane)?)?, path)?;
    if pos != buf.len() {
        return Err(Error::format(path, format!("{} trailing bytes", buf.len() - pos)));
    }
    Sample::new(video, frame, provenance, appearance, flow_image, target)
}

pub fn write_sample(dir: &Path, s: &Sample) -> Result<PathBuf> {
    let path = cache_path(dir, &s.video, s.frame, s.provenance);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, encode_sample(s)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_sample(path: &Path) -> Result<Sample> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_sample(&buf, path)
}

/// Every `.bin` sample under `dir`, in sorted path order.
pub fn read_sample_dir(dir: &Path) -> Result<Vec<Sample>> {
    let mut paths = vec![];
    let videos = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for v in videos {
        let v = v.map_err(|e| Error::io(dir, e))?.path();
        if !v.is_dir() {
            continue;
        }
        for f in std::fs::read_dir(&v).map_err(|e| Error::io(&v, e))? {
            let f = f.map_err(|e| Error::io(&v, e))?.path();
            if f.extension().is_some_and(|e| e == "bin") {
                paths.push(f);
            }
        }
    }
    paths.sort();
    paths.iter().map(|p| read_sample(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(w: usize, h: usize) -> Sample {
        let t = Tensor::from_fn(&[3, h, w], |i| i as f64 * 0.01);
        let d = DensityMap::normalized(Map::from_fn(w, h, |x, y| (x + y) as f64)).unwrap();
        Sample::new("clip", 4, Provenance::Half, t.clone(), t, d).unwrap()
    }

    #[test]
    fn dims_must_agree() {
        let t = Tensor::zeros(&[3, 4, 4]);
        let d = DensityMap::normalized(Map::zeros(4, 3)).unwrap();
        assert!(Sample::new("v", 0, Provenance::Original, t.clone(), t, d).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let s = sample(5, 3);
        let back = decode_sample(&encode_sample(&s), Path::new("x.bin")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn cache_truncated() {
        let bytes = encode_sample(&sample(2, 2));
        assert!(decode_sample(&bytes[..bytes.len() - 1], Path::new("x.bin")).is_err());
    }

    #[test]
    fn cache_name() {
        let p = cache_path(Path::new("c"), "v", 12, Provenance::Quarter);
        assert_eq!(p, Path::new("c/v/000012_4.bin"));
    }
}
