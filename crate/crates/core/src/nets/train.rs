//! Minibatch SGD on the Euclidean loss.

use log::info;

use crate::data::{BatchIterator, Sample};
use crate::error::{Error, Result};
use crate::map::Map;
use crate::nets::model::{InputMeans, Model};
use crate::optim::{sgd_step, OptimizerState, SgdConfig};
use crate::par;
use crate::tensor::{Real, Tensor};

/// How density targets are scaled before regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetScale {
    /// The density map as is (unit sum).
    Density,
    /// Divided by its maximum, so peaks are 1.
    #[default]
    Peak,
}

impl TargetScale {
    pub fn apply(self, density: &Map) -> Map {
        match self {
            TargetScale::Density => density.clone(),
            TargetScale::Peak => {
                let m = density.max();
                if m > 0.0 {
                    density.map(|v| v / m)
                } else {
                    density.clone()
                }
            }
        }
    }
}

impl std::str::FromStr for TargetScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(TargetScale::Density),
            "peak" => Ok(TargetScale::Peak),
            _ => Err(Error::Spec(format!("unknown target scale {s:?} (density | peak)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub sgd: SgdConfig,
    pub iterations: usize,
    pub batch: usize,
    pub seed: u64,
    /// Log the loss every this many iterations; 0 disables logging.
    pub log_every: usize,
    pub target_scale: TargetScale,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sgd: SgdConfig::default(),
            iterations: 2000,
            batch: 2,
            seed: 0,
            log_every: 100,
            target_scale: TargetScale::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean minibatch loss at every iteration.
    pub loss_trace: Vec<f64>,
    pub final_learning_rate: f64,
}

/// Per-channel means of the appearance and flow images over `samples`.
pub fn input_means(samples: &[Sample]) -> InputMeans {
    let mut sums = [[0.0f64; 3]; 2];
    let mut count = 0usize;
    for s in samples {
        for (k, t) in [s.appearance(), s.flow_image()].into_iter().enumerate() {
            for (c, sum) in sums[k].iter_mut().enumerate() {
                *sum += t.plane(0, c).iter().sum::<f64>();
            }
        }
        count += s.width() * s.height();
    }
    let mean = |k: usize| -> [f32; 3] {
        std::array::from_fn(|c| if count == 0 { 0.0 } else { (sums[k][c] / count as f64) as f32 })
    };
    InputMeans { appearance: mean(0), flow: mean(1) }
}

struct Prepared<T: Real> {
    appearance: Tensor<T>,
    flow: Tensor<T>,
    target: Tensor<T>,
}

/// Trains `model` in place. Per-sample gradients of a minibatch are computed
/// in parallel and summed in batch order, so runs are reproducible for a
/// given seed.
pub fn train<T: Real>(model: &mut Model<T>, samples: &[Sample], cfg: &TrainConfig) -> Result<TrainReport> {
    let data: Vec<Prepared<T>> = samples
        .iter()
        .map(|s| Prepared {
            appearance: s.appearance().cast(),
            flow: s.flow_image().cast(),
            target: cfg.target_scale.apply(s.target().map()).to_tensor(),
        })
        .collect();
    let needs_flow = model.spec.variant.needs_flow();
    let mut batches = BatchIterator::new(samples.len(), cfg.batch, cfg.seed)?;
    let mut state = OptimizerState::new(model.params().into_iter().map(|(_, t)| t), cfg.sgd)?;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let batch = batches.next_batch();
        let results = par::map_slice(&batch, |&i| {
            let d = &data[i];
            model.loss_and_grad(&d.appearance, needs_flow.then_some(&d.flow), &d.target)
        });
        let mut loss = 0.0;
        let mut grads: Option<Vec<Tensor<T>>> = None;
        for r in results {
            let (l, g) = r?;
            loss += l;
            match &mut grads {
                None => grads = Some(g),
                Some(acc) => {
                    for (a, b) in acc.iter_mut().zip(&g) {
                        a.axpy(T::one(), b)?;
                    }
                }
            }
        }
        let mut grads = grads.expect("batches are never empty");
        let inv = 1.0 / batch.len() as f64;
        loss *= inv;
        grads.iter_mut().for_each(|g| g.scale(T::of(inv)));

        if !loss.is_finite() || grads.iter().any(|g| !g.all_finite()) {
            let last = trace.last().map_or("none".to_string(), |l: &f64| format!("{l:e}"));
            let worst = model
                .params()
                .iter()
                .zip(&grads)
                .filter(|(_, g)| !g.all_finite())
                .map(|((n, _), _)| n.clone())
                .collect::<Vec<_>>();
            return Err(Error::NonFinite(format!(
                "training diverged at iteration {it}: loss {loss}, previous loss {last}, learning rate {:e}, \
                 samples {batch:?}, non-finite gradients in {worst:?}",
                state.learning_rate()
            )));
        }
        let lr = state.learning_rate();
        sgd_step(&mut model.params_mut(), &grads, &mut state)?;
        trace.push(loss);
        if cfg.log_every > 0 && (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
            info!("iteration {it}: loss {loss:.6e}, lr {lr:.3e}");
        }
    }
    Ok(TrainReport { loss_trace: trace, final_learning_rate: state.learning_rate() })
}
