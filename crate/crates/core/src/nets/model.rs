//! Network construction, forward pass and backpropagation for all variants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::map::Map;
use crate::nets::loss::euclidean_loss;
use crate::nets::spec::{check_input_dims, LayerSpec, NetworkSpec, Variant, BASE_CONVS};
use crate::nets::stream::{cast_params, Layer, Stream};
use crate::ops::{self, ConvParams, LrnConfig, MaxSelector, PoolConfig};
use crate::tensor::{Real, Tensor};

/// Per-channel means subtracted from the network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InputMeans {
    pub appearance: [f32; 3],
    pub flow: [f32; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fusion<T: Real> {
    Max,
    /// `(D, 2D, 1, 1)` filter bank over `[x_s, x_t]`.
    Conv(ConvParams<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body<T: Real> {
    Single(Stream<T>),
    Average { spatial: Stream<T>, temporal: Stream<T> },
    Fused { spatial: Stream<T>, temporal: Stream<T>, fusion: Fusion<T>, tail: Stream<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Real = f32> {
    pub spec: NetworkSpec,
    pub means: InputMeans,
    pub body: Body<T>,
}

/// Activations at the fusion point of a two-stream network.
#[derive(Debug, Clone)]
pub struct FusionFeatures<T: Real> {
    pub spatial: Tensor<T>,
    pub temporal: Tensor<T>,
    pub fused: Tensor<T>,
}

fn gaussian_params<T: Real>(
    rng: &mut ChaCha8Rng,
    d_out: usize,
    d_in: usize,
    f: usize,
    padding: usize,
    stride: usize,
    fan_in: usize,
) -> ConvParams<T> {
    let std = 1.0 / (fan_in as f64).sqrt();
    let filters = Tensor::from_fn(&[d_out, d_in, f, f], |_| {
        let z: f64 = StandardNormal.sample(rng);
        T::of(z * std)
    });
    ConvParams { filters, bias: Tensor::zeros(&[d_out]), padding, stride }
}

/// Instantiates `specs` as a stream, drawing weights from `rng` in layer order.
fn build_stream<T: Real>(
    name: &str,
    specs: &[(usize, LayerSpec)],
    mut channels: usize,
    rng: &mut ChaCha8Rng,
) -> Stream<T> {
    let layers = specs
        .iter()
        .map(|&(k, spec)| match spec {
            LayerSpec::Conv { d, f, p } => {
                let params = gaussian_params(rng, d, channels, f, p, 1, channels * f * f);
                channels = d;
                Layer::Conv { name: format!("conv{k}"), params }
            }
            LayerSpec::Deconv { d, f, s, p } => {
                let taps = f.div_ceil(s);
                let params = gaussian_params(rng, d, channels, f, p, s, channels * taps * taps);
                channels = d;
                Layer::Deconv { name: "deconv".into(), params }
            }
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Lrn => Layer::Lrn(LrnConfig::default()),
            LayerSpec::Pool => Layer::Pool(PoolConfig::default()),
        })
        .collect();
    Stream { name: name.into(), layers }
}

/// Layer specs of convolutions `from..=to`, tagged with their conv index,
/// optionally followed by the deconvolution.
fn chain_segment(spec: &NetworkSpec, from: usize, to: usize, deconv: bool) -> Vec<(usize, LayerSpec)> {
    let mut out: Vec<(usize, LayerSpec)> =
        (from..=to).flat_map(|k| spec.conv_block(k).into_iter().map(move |l| (k, l))).collect();
    if deconv {
        out.push((0, crate::nets::spec::DECONV));
    }
    out
}

/// `(D, 2D, 1, 1)` filters with two stacked identity blocks: output channel
/// `d` reads input channels `d` and `D + d` with weight 1, so the fused map
/// starts out as `x_s + x_t`.
pub fn identity_fusion<T: Real>(d: usize) -> ConvParams<T> {
    let mut filters = Tensor::zeros(&[d, 2 * d, 1, 1]);
    for o in 0..d {
        filters.data_mut()[o * 2 * d + o] = T::one();
        filters.data_mut()[o * 2 * d + d + o] = T::one();
    }
    ConvParams { filters, bias: Tensor::zeros(&[d]), padding: 0, stride: 1 }
}

/// Builds `spec` with fan-in scaled Gaussian weights, zero biases and
/// identity-block fusion filters; deterministic in `seed`.
pub fn build_network<T: Real>(spec: &NetworkSpec, seed: u64) -> Result<Model<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = BASE_CONVS.len();
    let full = chain_segment(spec, 1, n, true);
    let body = match spec.variant {
        Variant::SSNet | Variant::TSNet | Variant::STSDirectNet => {
            Body::Single(build_stream("main", &full, spec.input_channels(), &mut rng))
        }
        Variant::STSAvgNet => Body::Average {
            spatial: build_stream("spatial", &full, 3, &mut rng),
            temporal: build_stream("temporal", &full, 3, &mut rng),
        },
        Variant::STSMaxNet | Variant::STSConvNet => {
            let k = spec.fusion_layer;
            let head = chain_segment(spec, 1, k, false);
            let spatial = build_stream("spatial", &head, 3, &mut rng);
            let temporal = build_stream("temporal", &head, 3, &mut rng);
            let d = spec.conv_channels(k);
            let fusion = if spec.variant == Variant::STSConvNet {
                Fusion::Conv(identity_fusion(d))
            } else {
                Fusion::Max
            };
            let tail = build_stream("tail", &chain_segment(spec, k + 1, n, true), d, &mut rng);
            Body::Fused { spatial, temporal, fusion, tail }
        }
    };
    Ok(Model { spec: *spec, means: InputMeans::default(), body })
}

enum Prepared<T: Real> {
    One(Tensor<T>),
    Two(Tensor<T>, Tensor<T>),
}

fn subtract_means<T: Real>(x: &Tensor<T>, means: &[f32; 3]) -> Result<Tensor<T>> {
    let (n, c, _, _) = x.nchw()?;
    let mut out = x.clone();
    for b in 0..n {
        for (ch, &m) in means.iter().enumerate().take(c) {
            let m = T::of(m as f64);
            out.plane_mut(b, ch).iter_mut().for_each(|v| *v -= m);
        }
    }
    Ok(out)
}

impl<T: Real> Model<T> {
    fn prepare(&self, appearance: &Tensor<T>, flow: Option<&Tensor<T>>) -> Result<Prepared<T>> {
        let (n, c, h, w) = appearance.nchw()?;
        if c != 3 {
            return Err(Error::Shape(format!("appearance input needs 3 channels, got {c}")));
        }
        check_input_dims(w, h)?;
        let variant = self.spec.variant;
        let flow = match (variant.needs_flow(), flow) {
            (false, _) => None,
            (true, None) => {
                return Err(Error::Spec(format!("{variant} needs a flow image input")));
            }
            (true, Some(f)) => {
                if f.nchw()? != (n, 3, h, w) {
                    return Err(Error::Shape(format!(
                        "flow image dims {:?} do not match appearance dims {:?}",
                        f.dims(),
                        appearance.dims()
                    )));
                }
                Some(subtract_means(f, &self.means.flow)?)
            }
        };
        let app = subtract_means(appearance, &self.means.appearance)?;
        Ok(match (variant, flow) {
            (Variant::SSNet, _) => Prepared::One(app),
            (Variant::TSNet, Some(f)) => Prepared::One(f),
            (Variant::STSDirectNet, Some(f)) => Prepared::One(ops::channel_concat(&app, &f)?),
            (_, Some(f)) => Prepared::Two(app, f),
            (_, None) => unreachable!("flow presence checked above"),
        })
    }

    /// Saliency output with the input's spatial size and a single channel.
    pub fn forward(&self, appearance: &Tensor<T>, flow: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        let input = self.prepare(appearance, flow)?;
        match (&self.body, input) {
            (Body::Single(s), Prepared::One(x)) => s.forward(&x),
            (Body::Average { spatial, temporal }, Prepared::Two(a, f)) => {
                average(&spatial.forward(&a)?, &temporal.forward(&f)?)
            }
            (Body::Fused { spatial, temporal, fusion, tail }, Prepared::Two(a, f)) => {
                let (fused, _) = fuse(fusion, &spatial.forward(&a)?, &temporal.forward(&f)?)?;
                tail.forward(&fused)
            }
            _ => Err(Error::Spec("model body does not match its variant".into())),
        }
    }

    /// Stream activations at the fusion point (two-stream fused variants only).
    pub fn fusion_features(&self, appearance: &Tensor<T>, flow: &Tensor<T>) -> Result<FusionFeatures<T>> {
        let input = self.prepare(appearance, Some(flow))?;
        match (&self.body, input) {
            (Body::Fused { spatial, temporal, fusion, .. }, Prepared::Two(a, f)) => {
                let xs = spatial.forward(&a)?;
                let xt = temporal.forward(&f)?;
                let (fused, _) = fuse(fusion, &xs, &xt)?;
                Ok(FusionFeatures { spatial: xs, temporal: xt, fused })
            }
            _ => Err(Error::Spec(format!("{} has no fusion layer", self.spec.variant))),
        }
    }

    /// Saliency map for one `(3, H, W)` frame and flow image.
    pub fn predict_map(&self, appearance: &Tensor<f64>, flow: Option<&Tensor<f64>>) -> Result<Map> {
        let flow = flow.map(|f| f.cast::<T>());
        let out = self.forward(&appearance.cast(), flow.as_ref())?;
        Map::from_tensor(&out)
    }

    /// Euclidean loss against `target` and its gradient for every parameter,
    /// in [`Model::params`] order.
    pub fn loss_and_grad(
        &self,
        appearance: &Tensor<T>,
        flow: Option<&Tensor<T>>,
        target: &Tensor<T>,
    ) -> Result<(f64, Vec<Tensor<T>>)> {
        let input = self.prepare(appearance, flow)?;
        match (&self.body, input) {
            (Body::Single(s), Prepared::One(x)) => {
                let (y, cache) = s.forward_cached(x)?;
                let (loss, dy) = euclidean_loss(&y, target)?;
                Ok((loss, s.backward(&cache, dy)?.1))
            }
            (Body::Average { spatial, temporal }, Prepared::Two(a, f)) => {
                let (ys, cs) = spatial.forward_cached(a)?;
                let (yt, ct) = temporal.forward_cached(f)?;
                let (loss, mut dy) = euclidean_loss(&average(&ys, &yt)?, target)?;
                dy.scale(T::of(0.5));
                let mut grads = spatial.backward(&cs, dy.clone())?.1;
                grads.extend(temporal.backward(&ct, dy)?.1);
                Ok((loss, grads))
            }
            (Body::Fused { spatial, temporal, fusion, tail }, Prepared::Two(a, f)) => {
                let (xs, cs) = spatial.forward_cached(a)?;
                let (xt, ct) = temporal.forward_cached(f)?;
                let (fused, fcache) = fuse(fusion, &xs, &xt)?;
                let (y, ctail) = tail.forward_cached(fused)?;
                let (loss, dy) = euclidean_loss(&y, target)?;
                let (dfused, tail_grads) = tail.backward(&ctail, dy)?;
                let (dxs, dxt, fusion_grads) = match (fusion, fcache) {
                    (Fusion::Max, FuseCache::Max(sel)) => {
                        let (a, b) = ops::elementwise_max_backward(&sel, &dfused)?;
                        (a, b, vec![])
                    }
                    (Fusion::Conv(p), FuseCache::Conv(stacked)) => {
                        let g = ops::conv2d_backward(&stacked, p, &dfused)?;
                        let (a, b) = ops::channel_split(&g.input, xs.nchw()?.1)?;
                        (a, b, vec![g.filters, g.bias])
                    }
                    _ => unreachable!("cache built by the same fusion"),
                };
                let mut grads = spatial.backward(&cs, dxs)?.1;
                grads.extend(temporal.backward(&ct, dxt)?.1);
                grads.extend(fusion_grads);
                grads.extend(tail_grads);
                Ok((loss, grads))
            }
            _ => Err(Error::Spec("model body does not match its variant".into())),
        }
    }

    /// Every trainable tensor with its stable name, in declaration order.
    pub fn params(&self) -> Vec<(String, &Tensor<T>)> {
        match &self.body {
            Body::Single(s) => s.params(),
            Body::Average { spatial, temporal } => {
                let mut v = spatial.params();
                v.extend(temporal.params());
                v
            }
            Body::Fused { spatial, temporal, fusion, tail } => {
                let mut v = spatial.params();
                v.extend(temporal.params());
                if let Fusion::Conv(p) = fusion {
                    v.push(("fusion.weight".into(), &p.filters));
                    v.push(("fusion.bias".into(), &p.bias));
                }
                v.extend(tail.params());
                v
            }
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match &mut self.body {
            Body::Single(s) => s.params_mut(),
            Body::Average { spatial, temporal } => {
                let mut v = spatial.params_mut();
                v.extend(temporal.params_mut());
                v
            }
            Body::Fused { spatial, temporal, fusion, tail } => {
                let mut v = spatial.params_mut();
                v.extend(temporal.params_mut());
                if let Fusion::Conv(p) = fusion {
                    v.push(&mut p.filters);
                    v.push(&mut p.bias);
                }
                v.extend(tail.params_mut());
                v
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        let body = match &self.body {
            Body::Single(s) => Body::Single(s.cast()),
            Body::Average { spatial, temporal } => {
                Body::Average { spatial: spatial.cast(), temporal: temporal.cast() }
            }
            Body::Fused { spatial, temporal, fusion, tail } => Body::Fused {
                spatial: spatial.cast(),
                temporal: temporal.cast(),
                fusion: match fusion {
                    Fusion::Max => Fusion::Max,
                    Fusion::Conv(p) => Fusion::Conv(cast_params(p)),
                },
                tail: tail.cast(),
            },
        };
        Model { spec: self.spec, means: self.means, body }
    }

    /// Exchanges the roles of the two streams (weights and input means), so
    /// that feeding `(flow, frame)` to the result mirrors feeding
    /// `(frame, flow)` to `self`.
    pub fn swap_streams(&self) -> Result<Model<T>> {
        let mut m = self.clone();
        match &mut m.body {
            Body::Average { spatial, temporal } | Body::Fused { spatial, temporal, .. } => {
                std::mem::swap(&mut spatial.layers, &mut temporal.layers);
            }
            Body::Single(_) => {
                return Err(Error::Spec(format!("{} has a single stream", self.spec.variant)));
            }
        }
        std::mem::swap(&mut m.means.appearance, &mut m.means.flow);
        Ok(m)
    }

    /// STSAvgNet assembled from independently built SSNet and TSNet models.
    pub fn average_of(spatial: &Model<T>, temporal: &Model<T>) -> Result<Model<T>> {
        let (Body::Single(s), Body::Single(t)) = (&spatial.body, &temporal.body) else {
            return Err(Error::Spec("average_of needs two single-stream models".into()));
        };
        if spatial.spec.variant != Variant::SSNet || temporal.spec.variant != Variant::TSNet {
            return Err(Error::Spec("average_of needs an SSNet and a TSNet".into()));
        }
        let mut spatial_stream = s.clone();
        spatial_stream.name = "spatial".into();
        let mut temporal_stream = t.clone();
        temporal_stream.name = "temporal".into();
        Ok(Model {
            spec: NetworkSpec { variant: Variant::STSAvgNet, ..spatial.spec },
            means: InputMeans { appearance: spatial.means.appearance, flow: temporal.means.flow },
            body: Body::Average { spatial: spatial_stream, temporal: temporal_stream },
        })
    }
}

fn average<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let mut out = a.clone();
    out.axpy(T::one(), b)?;
    out.scale(T::of(0.5));
    Ok(out)
}

enum FuseCache<T: Real> {
    Max(MaxSelector),
    Conv(Tensor<T>),
}

fn fuse<T: Real>(fusion: &Fusion<T>, xs: &Tensor<T>, xt: &Tensor<T>) -> Result<(Tensor<T>, FuseCache<T>)> {
    match fusion {
        Fusion::Max => {
            let (y, sel) = ops::elementwise_max(xs, xt)?;
            Ok((y, FuseCache::Max(sel)))
        }
        Fusion::Conv(p) => {
            let stacked = ops::channel_concat(xs, xt)?;
            Ok((ops::conv2d(&stacked, p)?, FuseCache::Conv(stacked)))
        }
    }
}
