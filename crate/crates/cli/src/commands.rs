use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;

use dynsal_core::data::synthetic::{write_toy_dataset, SceneConfig};
use dynsal_core::data::{augment_multiscale, dataset_sources, load_dataset, read_sample_dir, write_sample, Dataset, Sample};
use dynsal_core::flow::{estimate_flow, flow_to_image, to_gray, write_flo};
use dynsal_core::imageio::{read_rgb, write_rgb16_png};
use dynsal_core::metrics::{evaluate, EvalConfig, EvalReport, EvalResult};
use dynsal_core::nets::{build_network, input_means, load_model, save_model, train, Model, Variant};
use dynsal_core::predict::{predict_dataset, predict_files, write_prediction};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("missing required setting `{key}` (flag --{})", key.replace('_', "-"))))
}

pub fn existing<'a>(value: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
    let p = required(value, key)?;
    if !p.exists() {
        return Err(CliError::Data(format!("{key} path {} does not exist", p.display())));
    }
    Ok(p)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Config snapshot with the command, version and creation time.
pub fn write_manifest(path: &Path, command: &str, cfg: &RunConfig) -> CliResult<()> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let text = format!(
        "# dynsal run manifest\ncommand = {command}\nversion = {}\ncreated_unix = {created}\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    );
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    info!("manifest written to {}", path.display());
    Ok(())
}

/// `<file>.manifest.txt` beside a file output.
fn manifest_beside(file: &Path) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.txt");
    file.with_file_name(name)
}

pub struct FlowPair {
    pub frame: PathBuf,
    pub next: PathBuf,
}

pub fn flow(cfg: &RunConfig, pair: Option<FlowPair>) -> CliResult<()> {
    let out = required(&cfg.output, "output")?;
    let params = cfg.flow_params();
    if let Some(FlowPair { frame, next }) = pair {
        for p in [&frame, &next] {
            if !p.is_file() {
                return Err(CliError::Data(format!("frame {} does not exist", p.display())));
            }
        }
        let a = to_gray(&read_rgb(&frame)?)?;
        let b = to_gray(&read_rgb(&next)?)?;
        let field = estimate_flow(&a, &b, &params)?.field;
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        write_flo(&field, out)?;
        write_rgb16_png(&out.with_extension("png"), &flow_to_image(&field, cfg.clip_bound)?.tensor)?;
        return write_manifest(&manifest_beside(out), "flow", cfg);
    }
    let ds = load_dataset(existing(&cfg.dataset, "dataset")?)?;
    for v in &ds.videos {
        let dir = out.join(&v.name).join("flow");
        create_dir(&dir)?;
        let grays = v.frames.iter().map(|f| read_rgb(&f.path).and_then(|t| to_gray(&t))).collect::<Result<Vec<_>, _>>()?;
        for (pos, f) in v.frames.iter().enumerate() {
            let (a, b) = match grays.len() {
                1 => (0, 0),
                n if pos + 1 < n => (pos, pos + 1),
                _ => (pos - 1, pos),
            };
            let field = estimate_flow(&grays[a], &grays[b], &params)?.field;
            write_flo(&field, &dir.join(format!("{:06}.flo", f.index)))?;
        }
        info!("{}: {} flow fields", v.name, v.frames.len());
    }
    write_manifest(&out.join("manifest.txt"), "flow", cfg)
}

fn dataset_samples(ds: &Dataset, cfg: &RunConfig) -> CliResult<Vec<Sample>> {
    let sources = dataset_sources(ds, &cfg.sample_config(), true)?;
    if sources.is_empty() {
        return Err(CliError::Data(format!("{} has no frames with fixations", ds.root.display())));
    }
    Ok(augment_multiscale(&sources, &cfg.sample_config())?)
}

pub fn augment(cfg: &RunConfig) -> CliResult<()> {
    let ds = load_dataset(existing(&cfg.dataset, "dataset")?)?;
    let out = required(&cfg.output, "output")?;
    let samples = dataset_samples(&ds, cfg)?;
    for s in &samples {
        write_sample(out, s)?;
    }
    info!("{} samples written to {}", samples.len(), out.display());
    write_manifest(&out.join("manifest.txt"), "augment", cfg)
}

fn training_samples(cfg: &RunConfig) -> CliResult<Vec<Sample>> {
    match (&cfg.cache, &cfg.dataset) {
        (Some(_), _) => {
            let dir = existing(&cfg.cache, "cache")?;
            let samples = read_sample_dir(dir)?;
            if samples.is_empty() {
                return Err(CliError::Data(format!("sample cache {} is empty", dir.display())));
            }
            if let Some(s) = samples.iter().find(|s| (s.width(), s.height()) != (cfg.input_width, cfg.input_height)) {
                return Err(CliError::Data(format!(
                    "cached sample {}/{} is {}x{}, configured input is {}x{}",
                    s.video,
                    s.frame,
                    s.width(),
                    s.height(),
                    cfg.input_width,
                    cfg.input_height
                )));
            }
            Ok(samples)
        }
        (None, Some(_)) => dataset_samples(&load_dataset(existing(&cfg.dataset, "dataset")?)?, cfg),
        (None, None) => Err(CliError::Usage("train needs `dataset` or `cache` (flag --dataset or --cache)".into())),
    }
}

/// Builds and trains `cfg.network_spec()`; returns the model and the loss trace.
fn fit(cfg: &RunConfig, samples: &[Sample]) -> CliResult<(Model<f32>, Vec<f64>)> {
    let mut model: Model<f32> = build_network(&cfg.network_spec(), cfg.seed)?;
    model.means = input_means(samples);
    info!(
        "training {} (fusion layer {}, width {}) on {} samples, {} parameters",
        cfg.variant,
        cfg.fusion_layer,
        cfg.width_scale,
        samples.len(),
        model.param_count()
    );
    let report = train(&mut model, samples, &cfg.train_config())?;
    Ok((model, report.loss_trace))
}

fn loss_csv(trace: &[f64]) -> String {
    let mut s = "iteration,loss\n".to_string();
    for (i, l) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i},{l:e}");
    }
    s
}

pub fn train_cmd(cfg: &RunConfig) -> CliResult<()> {
    let model_path = required(&cfg.model, "model")?;
    cfg.network_spec().validate()?;
    let samples = training_samples(cfg)?;
    let (model, trace) = fit(cfg, &samples)?;
    if let Some(dir) = model_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_model(&model, model_path)?;
    let csv = model_path.with_extension("loss.csv");
    std::fs::write(&csv, loss_csv(&trace)).map_err(|e| io_err(&csv, e))?;
    info!("model saved to {}", model_path.display());
    write_manifest(&manifest_beside(model_path), "train", cfg)
}

pub struct FrameInputs {
    pub frame: PathBuf,
    pub next: Option<PathBuf>,
    pub flo: Option<PathBuf>,
}

pub fn predict(cfg: &RunConfig, single: Option<FrameInputs>) -> CliResult<()> {
    let model = load_model(existing(&cfg.model, "model")?)?;
    let out = required(&cfg.output, "output")?;
    let mut sample_cfg = cfg.sample_config();
    (sample_cfg.input_width, sample_cfg.input_height) = (model.spec.input_width, model.spec.input_height);
    if let Some(FrameInputs { frame, next, flo }) = single {
        for p in std::iter::once(&frame).chain(next.as_ref()).chain(flo.as_ref()) {
            if !p.is_file() {
                return Err(CliError::Data(format!("input {} does not exist", p.display())));
            }
        }
        let map = predict_files(&model, &frame, next.as_deref(), flo.as_deref(), &sample_cfg)?;
        write_prediction(&map, out)?;
        return write_manifest(&manifest_beside(out), "predict", cfg);
    }
    let ds = load_dataset(existing(&cfg.dataset, "dataset")?)?;
    let written = predict_dataset(&model, &ds, &sample_cfg, out)?;
    info!("{} maps written to {}", written.len(), out.display());
    write_manifest(&out.join("manifest.txt"), "predict", cfg)
}

fn write_report(dir: &Path, rep: &EvalReport) -> CliResult<()> {
    create_dir(dir)?;
    for (name, text) in [("frames.csv", rep.frames_csv()), ("summary.csv", rep.summary_csv()), ("metadata.txt", rep.metadata())] {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> CliResult<()> {
    let ds = load_dataset(existing(&cfg.dataset, "dataset")?)?;
    let preds = existing(&cfg.predictions, "predictions")?;
    let out = required(&cfg.output, "output")?;
    let rep = evaluate(preds, &ds, &EvalConfig { seed: cfg.seed, kde_sigma: cfg.kde_sigma })?;
    write_report(out, &rep)?;
    print!("{}", rep.summary_csv());
    write_manifest(&out.join("manifest.txt"), "eval", cfg)
}

/// `"2-7"` or `"5"`.
pub fn parse_layers(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("invalid --layers {s:?}; expected a range like 2-7"));
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let k = s.trim().parse().map_err(|_| bad())?;
            (k, k)
        }
    };
    if lo < 1 || hi > 7 || lo > hi {
        return Err(CliError::Usage(format!("--layers {s:?} must lie within 1-7")));
    }
    Ok((lo..=hi).collect())
}

pub fn sweep_csv(rows: &[(usize, EvalResult)]) -> String {
    let mut s = String::from("fusion_layer");
    for c in EvalResult::COLUMNS {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for (k, r) in rows {
        let _ = write!(s, "conv{k}");
        for v in r.values() {
            let _ = write!(s, ",{v:.6}");
        }
        s.push('\n');
    }
    s
}

/// Trains, predicts and evaluates one fused model per fusion layer.
pub fn sweep(cfg: &RunConfig, layers: &[usize]) -> CliResult<()> {
    if !matches!(cfg.variant, Variant::STSMaxNet | Variant::STSConvNet) {
        return Err(CliError::Usage(format!("sweep needs variant STSMaxNet or STSConvNet, got {}", cfg.variant)));
    }
    let ds = load_dataset(existing(&cfg.dataset, "dataset")?)?;
    let out = required(&cfg.output, "output")?;
    let samples = dataset_samples(&ds, cfg)?;
    let mut rows = vec![];
    for &k in layers {
        let mut c = cfg.clone();
        c.fusion_layer = k;
        c.network_spec().validate()?;
        let (model, trace) = fit(&c, &samples)?;
        let dir = out.join(format!("conv{k}"));
        create_dir(&dir)?;
        save_model(&model, &dir.join("model.stsw"))?;
        let csv = dir.join("loss.csv");
        std::fs::write(&csv, loss_csv(&trace)).map_err(|e| io_err(&csv, e))?;
        predict_dataset(&model, &ds, &c.sample_config(), &dir.join("predictions"))?;
        let rep = evaluate(&dir.join("predictions"), &ds, &EvalConfig { seed: c.seed, kde_sigma: c.kde_sigma })?;
        write_report(&dir.join("eval"), &rep)?;
        info!("conv{k}: auc {:.4}, sauc {:.4}", rep.overall.auc, rep.overall.sauc);
        rows.push((k, rep.overall));
    }
    let report = sweep_csv(&rows);
    let p = out.join("sweep.csv");
    std::fs::write(&p, &report).map_err(|e| io_err(&p, e))?;
    print!("{report}");
    write_manifest(&out.join("manifest.txt"), "sweep", cfg)
}

pub fn synth(cfg: &RunConfig, videos: usize, scene: &SceneConfig) -> CliResult<()> {
    let out = required(&cfg.output, "output")?;
    write_toy_dataset(out, videos, scene, cfg.seed)?;
    info!("{videos} toy videos written to {}", out.display());
    write_manifest(&out.join("manifest.txt"), "synth", cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_ranges() {
        assert_eq!(parse_layers("2-7").unwrap(), vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(parse_layers("5").unwrap(), vec![5]);
        assert!(parse_layers("0-3").is_err());
        assert!(parse_layers("6-2").is_err());
        assert!(parse_layers("a-b").is_err());
    }

    #[test]
    fn sweep_rows() {
        let r = EvalResult { auc: 0.5, sauc: 0.5, cc: 0.0, nss: 0.0, ncc: 0.1, chi2: 0.9, n_fix: 1, n_neg: 2 };
        let csv = sweep_csv(&[(2, r), (3, r)]);
        assert_eq!(csv.lines().next().unwrap(), "fusion_layer,auc,sauc,cc,nss,ncc,chi2");
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("\nconv3,0.500000"));
    }

    #[test]
    fn manifest_name() {
        assert_eq!(manifest_beside(Path::new("out/m.stsw")), Path::new("out/m.stsw.manifest.txt"));
    }
}
