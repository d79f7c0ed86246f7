//! Run configuration: `key = value` files, overridden by command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dynsal_core::data::SampleConfig;
use dynsal_core::flow::{HornSchunck, DEFAULT_CLIP_BOUND};
use dynsal_core::nets::{NetworkSpec, TargetScale, TrainConfig, Variant, WidthScale};
use dynsal_core::optim::SgdConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub fusion_layer: usize,
    pub width_scale: WidthScale,
    pub input_width: usize,
    pub input_height: usize,
    pub base_lr: f64,
    pub lr_step: usize,
    pub gamma: f64,
    pub iterations: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch: usize,
    pub seed: u64,
    pub clip_bound: f64,
    /// `None` means width / 32.
    pub kde_sigma: Option<f64>,
    pub target_scale: TargetScale,
    pub flow_iterations: usize,
    pub flow_smoothness: f64,
    pub flow_levels: usize,
    pub log_every: usize,
    pub dataset: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sgd = SgdConfig::default();
        let hs = HornSchunck::default();
        RunConfig {
            variant: Variant::STSConvNet,
            fusion_layer: 5,
            width_scale: WidthScale::new(1, 8).expect("nonzero"),
            input_width: 80,
            input_height: 60,
            base_lr: sgd.base_lr,
            lr_step: sgd.lr_step,
            gamma: sgd.gamma,
            iterations: 2000,
            momentum: sgd.momentum,
            weight_decay: sgd.weight_decay,
            batch: 2,
            seed: 0,
            clip_bound: DEFAULT_CLIP_BOUND,
            kde_sigma: None,
            target_scale: TargetScale::default(),
            flow_iterations: hs.iterations,
            flow_smoothness: hs.smoothness,
            flow_levels: hs.levels,
            log_every: 100,
            dataset: None,
            cache: None,
            model: None,
            predictions: None,
            output: None,
        }
    }
}

pub const KEYS: [&str; 25] = [
    "variant",
    "fusion_layer",
    "width_scale",
    "input_width",
    "input_height",
    "base_lr",
    "lr_step",
    "gamma",
    "iterations",
    "momentum",
    "weight_decay",
    "batch",
    "seed",
    "clip_bound",
    "kde_sigma",
    "target_scale",
    "flow_iterations",
    "flow_smoothness",
    "flow_levels",
    "log_every",
    "dataset",
    "cache",
    "model",
    "predictions",
    "output",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| CliError::Usage(format!("invalid value {value:?} for {key}: {e}")))
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or(String::new(), |p| p.display().to_string())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "variant" => self.variant = parse(key, value)?,
            "fusion_layer" => self.fusion_layer = parse(key, value)?,
            "width_scale" => self.width_scale = parse(key, value)?,
            "input_width" => self.input_width = parse(key, value)?,
            "input_height" => self.input_height = parse(key, value)?,
            "base_lr" => self.base_lr = parse(key, value)?,
            "lr_step" => self.lr_step = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "clip_bound" => self.clip_bound = parse(key, value)?,
            "kde_sigma" => {
                self.kde_sigma = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "target_scale" => self.target_scale = parse(key, value)?,
            "flow_iterations" => self.flow_iterations = parse(key, value)?,
            "flow_smoothness" => self.flow_smoothness = parse(key, value)?,
            "flow_levels" => self.flow_levels = parse(key, value)?,
            "log_every" => self.log_every = parse(key, value)?,
            "dataset" => self.dataset = path(),
            "cache" => self.cache = path(),
            "model" => self.model = path(),
            "predictions" => self.predictions = path(),
            "output" => self.output = path(),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "variant" => self.variant.to_string(),
            "fusion_layer" => self.fusion_layer.to_string(),
            "width_scale" => self.width_scale.to_string(),
            "input_width" => self.input_width.to_string(),
            "input_height" => self.input_height.to_string(),
            "base_lr" => self.base_lr.to_string(),
            "lr_step" => self.lr_step.to_string(),
            "gamma" => self.gamma.to_string(),
            "iterations" => self.iterations.to_string(),
            "momentum" => self.momentum.to_string(),
            "weight_decay" => self.weight_decay.to_string(),
            "batch" => self.batch.to_string(),
            "seed" => self.seed.to_string(),
            "clip_bound" => self.clip_bound.to_string(),
            "kde_sigma" => self.kde_sigma.map_or("auto".into(), |s| s.to_string()),
            "target_scale" => match self.target_scale {
                TargetScale::Density => "density".into(),
                TargetScale::Peak => "peak".into(),
            },
            "flow_iterations" => self.flow_iterations.to_string(),
            "flow_smoothness" => self.flow_smoothness.to_string(),
            "flow_levels" => self.flow_levels.to_string(),
            "log_every" => self.log_every.to_string(),
            "dataset" => opt_path(&self.dataset),
            "cache" => opt_path(&self.cache),
            "model" => opt_path(&self.model),
            "predictions" => opt_path(&self.predictions),
            "output" => opt_path(&self.output),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Applies the `key = value` lines of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Usage(format!("{}:{}: {msg}", origin.display(), n + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got {line:?}")))?;
            self.set(k.trim(), v.trim()).map_err(|e| at(e.message()))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Every key in a form [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k));
        }
        s
    }

    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec::new(self.variant)
            .with_fusion_layer(self.fusion_layer)
            .with_width_scale(self.width_scale)
            .with_input_size(self.input_width, self.input_height)
    }

    pub fn sample_config(&self) -> SampleConfig {
        let mut c = SampleConfig::new(self.input_width, self.input_height);
        c.clip_bound = self.clip_bound;
        c.kde_sigma = self.kde_sigma;
        c.flow = self.flow_params();
        c
    }

    pub fn flow_params(&self) -> HornSchunck {
        HornSchunck { iterations: self.flow_iterations, smoothness: self.flow_smoothness, levels: self.flow_levels }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            sgd: SgdConfig {
                base_lr: self.base_lr,
                momentum: self.momentum,
                weight_decay: self.weight_decay,
                lr_step: self.lr_step,
                gamma: self.gamma,
            },
            iterations: self.iterations,
            batch: self.batch,
            seed: self.seed,
            log_every: self.log_every,
            target_scale: self.target_scale,
        }
    }
}
