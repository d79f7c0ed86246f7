//! Scoring a directory of predicted maps against a dataset.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use crate::data::{density_from_fixations, default_sigma, Dataset, Fixation};
use crate::error::{Error, Result};
use crate::imageio::read_raw_map;
use crate::map::Map;
use crate::metrics::measures::{auc, cc, chi2, ncc, nss, sauc, SAUC_ROUNDS};
use crate::par;
use crate::resample::resize_map;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub auc: f64,
    pub sauc: f64,
    pub cc: f64,
    pub nss: f64,
    pub ncc: f64,
    pub chi2: f64,
    /// Fixations scored.
    pub n_fix: usize,
    /// Non-fixated pixels serving as AUC negatives.
    pub n_neg: usize,
}

impl EvalResult {
    pub const COLUMNS: [&'static str; 6] = ["auc", "sauc", "cc", "nss", "ncc", "chi2"];

    pub fn values(&self) -> [f64; 6] {
        [self.auc, self.sauc, self.cc, self.nss, self.ncc, self.chi2]
    }
}

/// Scores one frame. Measures that are undefined for this input (say CC of a
/// constant prediction) are reported as NaN. Negative saliency carries no
/// mass for chi2 and is clamped to 0 there.
pub fn evaluate_frame(
    prediction: &Map,
    fixations: &[Fixation],
    negative_pool: &[Fixation],
    sigma: f64,
    seed: u64,
) -> Result<EvalResult> {
    let density = density_from_fixations(fixations, prediction.width(), prediction.height(), sigma)?;
    let density = density.map();
    let or_nan = |r: Result<f64>| match r {
        Ok(v) => Ok(v),
        Err(Error::Undefined(msg)) => {
            warn!("{msg}; recording NaN");
            Ok(f64::NAN)
        }
        Err(e) => Err(e),
    };
    let mut fixated: Vec<(usize, usize)> =
        fixations.iter().map(|f| f.pixel(prediction.width(), prediction.height())).collect();
    fixated.sort();
    fixated.dedup();
    Ok(EvalResult {
        auc: or_nan(auc(prediction, fixations))?,
        sauc: or_nan(sauc(prediction, fixations, negative_pool, seed))?,
        cc: or_nan(cc(prediction, density))?,
        nss: or_nan(nss(prediction, fixations))?,
        ncc: or_nan(ncc(prediction, density))?,
        chi2: or_nan(chi2(&prediction.map(|v| v.max(0.0)), density))?,
        n_fix: fixations.len(),
        n_neg: prediction.len() - fixated.len(),
    })
}

/// Mean of every measure, ignoring NaNs; counts are summed.
pub fn aggregate(results: &[EvalResult]) -> Result<EvalResult> {
    if results.is_empty() {
        return Err(Error::Undefined("no evaluated frames to aggregate".into()));
    }
    let mean = |f: fn(&EvalResult) -> f64| {
        let vals: Vec<f64> = results.iter().map(f).filter(|v| !v.is_nan()).collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    Ok(EvalResult {
        auc: mean(|r| r.auc),
        sauc: mean(|r| r.sauc),
        cc: mean(|r| r.cc),
        nss: mean(|r| r.nss),
        ncc: mean(|r| r.ncc),
        chi2: mean(|r| r.chi2),
        n_fix: results.iter().map(|r| r.n_fix).sum(),
        n_neg: results.iter().map(|r| r.n_neg).sum(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEval {
    pub video: String,
    pub frame: usize,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub frames: Vec<FrameEval>,
    pub per_video: Vec<(String, EvalResult)>,
    pub overall: EvalResult,
    /// Frames without fixations, not scored.
    pub skipped: usize,
    pub seed: u64,
}

fn fmt_row(out: &mut String, head: &str, r: &EvalResult) {
    out.push_str(head);
    for v in r.values() {
        let _ = write!(out, ",{v:.6}");
    }
    let _ = writeln!(out, ",{},{}", r.n_fix, r.n_neg);
}

impl EvalReport {
    /// `video,frame,auc,sauc,cc,nss,ncc,chi2,n_fix,n_neg`.
    pub fn frames_csv(&self) -> String {
        let mut s = "video,frame,auc,sauc,cc,nss,ncc,chi2,n_fix,n_neg\n".to_string();
        for f in &self.frames {
            fmt_row(&mut s, &format!("{},{}", f.video, f.frame), &f.result);
        }
        s
    }

    /// One row per video plus a final `ALL` row.
    pub fn summary_csv(&self) -> String {
        let mut s = "video,auc,sauc,cc,nss,ncc,chi2,n_fix,n_neg\n".to_string();
        for (v, r) in &self.per_video {
            fmt_row(&mut s, v, r);
        }
        fmt_row(&mut s, "ALL", &self.overall);
        s
    }

    /// Conventions needed to interpret the numbers.
    pub fn metadata(&self) -> String {
        format!(
            "auc = all thresholds, positives at fixated pixels, negatives at all non-fixated pixels, ties count half\n\
             sauc = {SAUC_ROUNDS} rounds, negatives drawn with replacement from other frames' fixations, seed {} plus frame ordinal\n\
             nss = population standard deviation, constant map scores 0\n\
             ncc = uncentered\n\
             chi2 = half-weighted symmetric form on unit-sum maps, negative saliency clamped to 0\n\
             undefined measures = NaN, excluded from means\n\
             frames_scored = {}\n\
             frames_skipped = {}\n",
            self.seed,
            self.frames.len(),
            self.skipped
        )
    }
}

/// `<dir>/<video>/<frame:06>.raw`.
pub fn prediction_path(dir: &Path, video: &str, frame: usize) -> PathBuf {
    dir.join(video).join(format!("{frame:06}.raw"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub seed: u64,
    /// KDE bandwidth at the video resolution; `None` means width / 32.
    pub kde_sigma: Option<f64>,
}

/// Scores every frame with fixations. Predictions are resized to the
/// video's resolution. The sAUC negative pool of a frame holds the
/// fixations of every other frame in the dataset, mapped to that video's
/// resolution.
pub fn evaluate(pred_dir: &Path, dataset: &Dataset, cfg: &EvalConfig) -> Result<EvalReport> {
    struct Job<'a> {
        video: usize,
        frame: usize,
        fixations: &'a [Fixation],
    }
    let mut jobs = vec![];
    let mut skipped = 0;
    for (vi, v) in dataset.videos.iter().enumerate() {
        for f in &v.frames {
            match v.fixations_of(f.index) {
                Some(s) => jobs.push(Job { video: vi, frame: f.index, fixations: &s.points }),
                None => skipped += 1,
            }
        }
    }
    for j in &jobs {
        let p = prediction_path(pred_dir, &dataset.videos[j.video].name, j.frame);
        if !p.is_file() {
            return Err(Error::Data(format!("missing prediction {}", p.display())));
        }
    }
    let results = par::map_range(jobs.len(), |k| -> Result<EvalResult> {
        let job = &jobs[k];
        let video = &dataset.videos[job.video];
        let (w, h) = (video.width, video.height);
        let pool: Vec<Fixation> = jobs
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .flat_map(|(_, o)| {
                let ov = &dataset.videos[o.video];
                o.fixations.iter().map(move |f| f.rescaled((ov.width, ov.height), (w, h)))
            })
            .collect();
        let path = prediction_path(pred_dir, &video.name, job.frame);
        let pred = read_raw_map(&path)?;
        let pred = if (pred.width(), pred.height()) == (w, h) { pred } else { resize_map(&pred, w, h)? };
        let sigma = cfg.kde_sigma.unwrap_or_else(|| default_sigma(w));
        evaluate_frame(&pred, job.fixations, &pool, sigma, cfg.seed.wrapping_add(k as u64))
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    });
    let mut frames = Vec::with_capacity(jobs.len());
    for (job, r) in jobs.iter().zip(results) {
        frames.push(FrameEval { video: dataset.videos[job.video].name.clone(), frame: job.frame, result: r? });
    }
    let mut per_video = vec![];
    for v in &dataset.videos {
        let rs: Vec<EvalResult> = frames.iter().filter(|f| f.video == v.name).map(|f| f.result).collect();
        if !rs.is_empty() {
            per_video.push((v.name.clone(), aggregate(&rs)?));
        }
    }
    let all: Vec<EvalResult> = frames.iter().map(|f| f.result).collect();
    let overall = aggregate(&all)?;
    Ok(EvalReport { frames, per_video, overall, skipped, seed: cfg.seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(auc: f64) -> EvalResult {
        EvalResult { auc, sauc: 0.5, cc: 0.1, nss: 1.0, ncc: 0.2, chi2: 0.3, n_fix: 2, n_neg: 10 }
    }

    #[test]
    fn mean_of_two() {
        let a = aggregate(&[result(0.6), result(0.8)]).unwrap();
        assert!((a.auc - 0.7).abs() < 1e-15);
        assert_eq!(a.n_fix, 4);
    }

    #[test]
    fn single_is_identity() {
        assert_eq!(aggregate(&[result(0.6)]).unwrap(), result(0.6));
    }

    #[test]
    fn nan_skipped() {
        let mut r = result(0.6);
        r.cc = f64::NAN;
        let a = aggregate(&[r, result(0.8)]).unwrap();
        assert_eq!(a.cc, 0.1);
    }
}
