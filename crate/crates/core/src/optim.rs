//! SGD with momentum, L2 weight decay and a step learning-rate schedule.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Multiply the learning rate by `gamma` every `lr_step` steps; 0 disables.
    pub lr_step: usize,
    pub gamma: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { base_lr: 1e-4, momentum: 0.9, weight_decay: 0.0005, lr_step: 500, gamma: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState<T: Real = f64> {
    pub velocity: Vec<Tensor<T>>,
    pub config: SgdConfig,
    pub step_count: usize,
}

impl<T: Real> OptimizerState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>, config: SgdConfig) -> Result<Self> {
        if !(config.base_lr >= 0.0 && config.base_lr.is_finite()) {
            return Err(Error::Spec(format!("learning rate must be >= 0, got {}", config.base_lr)));
        }
        if !(0.0..1.0).contains(&config.momentum) {
            return Err(Error::Spec(format!("momentum must be in [0, 1), got {}", config.momentum)));
        }
        if config.weight_decay < 0.0 {
            return Err(Error::Spec(format!(
                "weight decay must be >= 0, got {}",
                config.weight_decay
            )));
        }
        let velocity = params.into_iter().map(|p| Tensor::zeros(p.dims())).collect();
        Ok(OptimizerState { velocity, config, step_count: 0 })
    }

    /// Learning rate applied at the next step.
    pub fn learning_rate(&self) -> f64 {
        let c = &self.config;
        match c.lr_step {
            0 => c.base_lr,
            k => c.base_lr * c.gamma.powi((self.step_count / k) as i32),
        }
    }
}

/// `v ← μ·v − lr·(g + wd·w); w ← w + v`, then advances the step counter.
pub fn sgd_step<T: Real>(
    params: &mut [&mut Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut OptimizerState<T>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.velocity.len() {
        return Err(Error::Shape(format!(
            "{} params, {} grads, {} velocity buffers",
            params.len(),
            grads.len(),
            state.velocity.len()
        )));
    }
    for ((p, g), v) in params.iter().zip(grads).zip(&state.velocity) {
        if !p.same_shape(g) || !p.same_shape(v) {
            return Err(Error::Shape(format!(
                "param {:?}, grad {:?}, velocity {:?}",
                p.dims(),
                g.dims(),
                v.dims()
            )));
        }
    }
    let lr = T::of(state.learning_rate());
    let mu = T::of(state.config.momentum);
    let wd = T::of(state.config.weight_decay);
    for ((p, g), v) in params.iter_mut().zip(grads).zip(state.velocity.iter_mut()) {
        for ((w, &gv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *vv = mu * *vv - lr * (gv + wd * *w);
            *w += *vv;
        }
    }
    state.step_count += 1;
    Ok(())
}
