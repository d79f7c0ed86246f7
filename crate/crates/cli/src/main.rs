//! `dynsal`: flow extraction, augmentation, training, prediction,
//! evaluation and the fusion-layer sweep.

mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dynsal_core::data::synthetic::SceneConfig;

use crate::commands::{FlowPair, FrameInputs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "dynsal", version, about = "Spatio-temporal saliency networks for video")]
struct Cli {
    /// `key = value` run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// One flag per config key.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    variant: Option<String>,
    #[arg(long, global = true)]
    fusion_layer: Option<String>,
    /// Channel width multiplier, e.g. 1/8.
    #[arg(long, global = true)]
    width_scale: Option<String>,
    #[arg(long, global = true)]
    input_width: Option<String>,
    #[arg(long, global = true)]
    input_height: Option<String>,
    #[arg(long, global = true)]
    base_lr: Option<String>,
    #[arg(long, global = true)]
    lr_step: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<String>,
    #[arg(long, global = true)]
    iterations: Option<String>,
    #[arg(long, global = true)]
    momentum: Option<String>,
    #[arg(long, global = true)]
    weight_decay: Option<String>,
    #[arg(long, global = true)]
    batch: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    clip_bound: Option<String>,
    /// KDE bandwidth in pixels, or `auto` for width / 32.
    #[arg(long, global = true)]
    kde_sigma: Option<String>,
    /// `peak` or `density`.
    #[arg(long, global = true)]
    target_scale: Option<String>,
    #[arg(long, global = true)]
    flow_iterations: Option<String>,
    #[arg(long, global = true)]
    flow_smoothness: Option<String>,
    #[arg(long, global = true)]
    flow_levels: Option<String>,
    #[arg(long, global = true)]
    log_every: Option<String>,
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true)]
    cache: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    predictions: Option<String>,
    #[arg(long, global = true)]
    output: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 25] {
        [
            ("variant", &self.variant),
            ("fusion_layer", &self.fusion_layer),
            ("width_scale", &self.width_scale),
            ("input_width", &self.input_width),
            ("input_height", &self.input_height),
            ("base_lr", &self.base_lr),
            ("lr_step", &self.lr_step),
            ("gamma", &self.gamma),
            ("iterations", &self.iterations),
            ("momentum", &self.momentum),
            ("weight_decay", &self.weight_decay),
            ("batch", &self.batch),
            ("seed", &self.seed),
            ("clip_bound", &self.clip_bound),
            ("kde_sigma", &self.kde_sigma),
            ("target_scale", &self.target_scale),
            ("flow_iterations", &self.flow_iterations),
            ("flow_smoothness", &self.flow_smoothness),
            ("flow_levels", &self.flow_levels),
            ("log_every", &self.log_every),
            ("dataset", &self.dataset),
            ("cache", &self.cache),
            ("model", &self.model),
            ("predictions", &self.predictions),
            ("output", &self.output),
        ]
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Horn–Schunck flow for a frame pair, or for every frame of a dataset.
    Flow {
        #[arg(long, requires = "next")]
        frame: Option<PathBuf>,
        #[arg(long, requires = "frame")]
        next: Option<PathBuf>,
    },
    /// Write original, half and quarter resolution samples to a cache directory.
    Augment,
    /// Train a network on a dataset or a sample cache.
    Train,
    /// Saliency maps for one frame or for a whole dataset.
    Predict {
        #[arg(long)]
        frame: Option<PathBuf>,
        /// Following frame, used to estimate flow.
        #[arg(long, requires = "frame", conflicts_with = "flo")]
        next: Option<PathBuf>,
        /// Precomputed `.flo` for the frame.
        #[arg(long, requires = "frame")]
        flo: Option<PathBuf>,
    },
    /// Score a prediction directory against a dataset.
    Eval,
    /// Train and evaluate one fused model per fusion layer.
    Sweep {
        #[arg(long, default_value = "2-7")]
        layers: String,
    },
    /// Generate a toy dataset of moving discs with simulated fixations.
    Synth {
        #[arg(long, default_value_t = 2)]
        videos: usize,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, default_value_t = 4)]
        subjects: usize,
    },
}

fn run_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for (key, value) in cli.overrides.pairs() {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| CliError::Usage(format!("--{}: {}", key.replace('_', "-"), e.message())))?;
        }
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = run_config(&cli)?;
    match cli.command {
        Command::Flow { frame, next } => {
            let pair = frame.zip(next).map(|(frame, next)| FlowPair { frame, next });
            commands::flow(&cfg, pair)
        }
        Command::Augment => commands::augment(&cfg),
        Command::Train => commands::train_cmd(&cfg),
        Command::Predict { frame, next, flo } => {
            commands::predict(&cfg, frame.map(|frame| FrameInputs { frame, next, flo }))
        }
        Command::Eval => commands::eval(&cfg),
        Command::Sweep { layers } => commands::sweep(&cfg, &commands::parse_layers(&layers)?),
        Command::Synth { videos, frames, subjects } => {
            let scene = SceneConfig { frames, subjects, ..SceneConfig::default() };
            commands::synth(&cfg, videos, &scene)
        }
    }
}

fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    ExitCode::from(run(std::env::args_os()) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_cover_every_key() {
        let keys: Vec<&str> = Overrides::default().pairs().iter().map(|(k, _)| *k).collect();
        assert_eq!(keys, config::KEYS);
    }

    #[test]
    fn flag_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("run.cfg");
        std::fs::write(&f, "iterations = 10\nseed = 4\n").unwrap();
        let cli = Cli::try_parse_from(["dynsal", "train", "--config", f.to_str().unwrap(), "--seed", "9"]).unwrap();
        let cfg = run_config(&cli).unwrap();
        assert_eq!((cfg.iterations, cfg.seed), (10, 9));
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["dynsal", "bogus"].map(OsString::from)), 1);
        assert_eq!(run(["dynsal", "train", "--batch", "x"].map(OsString::from)), 1);
    }
}
