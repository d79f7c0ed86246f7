//! Sequential layer stacks with cached forward passes for backprop.

use crate::error::Result;
use crate::ops::{self, ConvParams, LrnConfig, PoolConfig, PoolIndices};
use crate::tensor::{Real, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T: Real> {
    Conv { name: String, params: ConvParams<T> },
    Relu,
    Lrn(LrnConfig),
    Pool(PoolConfig),
    Deconv { name: String, params: ConvParams<T> },
}

impl<T: Real> Layer<T> {
    pub fn params(&self) -> Option<(&str, &ConvParams<T>)> {
        match self {
            Layer::Conv { name, params } | Layer::Deconv { name, params } => Some((name, params)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<&mut ConvParams<T>> {
        match self {
            Layer::Conv { params, .. } | Layer::Deconv { params, .. } => Some(params),
            _ => None,
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(match self {
            Layer::Conv { params, .. } => ops::conv2d(x, params)?,
            Layer::Relu => ops::relu(x),
            Layer::Lrn(cfg) => ops::lrn(x, *cfg)?.0,
            Layer::Pool(cfg) => ops::maxpool(x, *cfg)?.0,
            Layer::Deconv { params, .. } => ops::deconv2d(x, params)?,
        })
    }

    fn forward_cached(&self, x: Tensor<T>) -> Result<(Tensor<T>, Cache<T>)> {
        Ok(match self {
            Layer::Conv { params, .. } => (ops::conv2d(&x, params)?, Cache::Input(x)),
            Layer::Deconv { params, .. } => (ops::deconv2d(&x, params)?, Cache::Input(x)),
            Layer::Relu => (ops::relu(&x), Cache::Input(x)),
            Layer::Lrn(cfg) => {
                let (y, scale) = ops::lrn(&x, *cfg)?;
                (y, Cache::Lrn { input: x, scale })
            }
            Layer::Pool(cfg) => {
                let (y, idx) = ops::maxpool(&x, *cfg)?;
                (y, Cache::Pool { dims: x.dims().to_vec(), idx })
            }
        })
    }

    /// Returns the input gradient and, for parametric layers, `(filters, bias)` grads.
    fn backward(&self, cache: &Cache<T>, dy: &Tensor<T>) -> Result<(Tensor<T>, Option<[Tensor<T>; 2]>)> {
        Ok(match (self, cache) {
            (Layer::Conv { params, .. }, Cache::Input(x)) => {
                let g = ops::conv2d_backward(x, params, dy)?;
                (g.input, Some([g.filters, g.bias]))
            }
            (Layer::Deconv { params, .. }, Cache::Input(x)) => {
                let g = ops::deconv2d_backward(x, params, dy)?;
                (g.input, Some([g.filters, g.bias]))
            }
            (Layer::Relu, Cache::Input(x)) => (ops::relu_backward(x, dy)?, None),
            (Layer::Lrn(cfg), Cache::Lrn { input, scale }) => {
                (ops::lrn_backward(input, scale, dy, *cfg)?, None)
            }
            (Layer::Pool(_), Cache::Pool { dims, idx }) => (ops::maxpool_backward(dims, idx, dy)?, None),
            _ => unreachable!("cache built by the same layer"),
        })
    }
}

#[derive(Debug, Clone)]
enum Cache<T: Real> {
    Input(Tensor<T>),
    Lrn { input: Tensor<T>, scale: Tensor<T> },
    Pool { dims: Vec<usize>, idx: PoolIndices },
}

#[derive(Debug, Clone)]
pub struct StreamCache<T: Real>(Vec<Cache<T>>);

#[derive(Debug, Clone, PartialEq)]
pub struct Stream<T: Real> {
    pub name: String,
    pub layers: Vec<Layer<T>>,
}

impl<T: Real> Stream<T> {
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: Tensor<T>) -> Result<(Tensor<T>, StreamCache<T>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x;
        for layer in &self.layers {
            let (y, c) = layer.forward_cached(cur)?;
            caches.push(c);
            cur = y;
        }
        Ok((cur, StreamCache(caches)))
    }

    /// Input gradient plus parameter gradients in [`Stream::params`] order.
    pub fn backward(&self, cache: &StreamCache<T>, dy: Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        let mut grads: Vec<[Tensor<T>; 2]> = Vec::new();
        let mut cur = dy;
        for (layer, c) in self.layers.iter().zip(&cache.0).rev() {
            let (dx, pg) = layer.backward(c, &cur)?;
            if let Some(pg) = pg {
                grads.push(pg);
            }
            cur = dx;
        }
        Ok((cur, grads.into_iter().rev().flatten().collect()))
    }

    /// `(name, tensor)` for each filter bank and bias, in layer order.
    pub fn params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for l in &self.layers {
            if let Some((name, p)) = l.params() {
                out.push((format!("{}.{name}.weight", self.name), &p.filters));
                out.push((format!("{}.{name}.bias", self.name), &p.bias));
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            if let Some(p) = l.params_mut() {
                out.push(&mut p.filters);
                out.push(&mut p.bias);
            }
        }
        out
    }

    pub fn cast<U: Real>(&self) -> Stream<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv { name, params } => Layer::Conv { name: name.clone(), params: cast_params(params) },
                Layer::Deconv { name, params } => Layer::Deconv { name: name.clone(), params: cast_params(params) },
                Layer::Relu => Layer::Relu,
                Layer::Lrn(c) => Layer::Lrn(*c),
                Layer::Pool(c) => Layer::Pool(*c),
            })
            .collect();
        Stream { name: self.name.clone(), layers }
    }
}

pub(crate) fn cast_params<T: Real, U: Real>(p: &ConvParams<T>) -> ConvParams<U> {
    ConvParams { filters: p.filters.cast(), bias: p.bias.cast(), padding: p.padding, stride: p.stride }
}
