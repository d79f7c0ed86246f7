//! Declarative description of the six network variants.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Appearance only.
    SSNet,
    /// Flow image only.
    TSNet,
    /// Single stream on the 6-channel stack of frame and flow image.
    STSDirectNet,
    /// Pixelwise mean of independent spatial and temporal streams.
    STSAvgNet,
    /// Two streams merged by elementwise max after `fusion_layer`.
    STSMaxNet,
    /// Two streams merged by a learned 1×1 convolution after `fusion_layer`.
    STSConvNet,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::SSNet,
        Variant::TSNet,
        Variant::STSDirectNet,
        Variant::STSAvgNet,
        Variant::STSMaxNet,
        Variant::STSConvNet,
    ];

    pub fn needs_flow(self) -> bool {
        self != Variant::SSNet
    }

    pub fn is_fused(self) -> bool {
        matches!(self, Variant::STSMaxNet | Variant::STSConvNet)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Spec(format!(
                    "unknown variant {s:?}; expected one of SSNet, TSNet, STSDirectNet, STSAvgNet, STSMaxNet, STSConvNet"
                ))
            })
    }
}

/// Positive rational multiplier applied to hidden channel counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WidthScale {
    num: u32,
    den: u32,
}

impl WidthScale {
    pub const FULL: WidthScale = WidthScale { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Spec(format!("width scale {num}/{den} must be positive")));
        }
        let g = gcd(num, den);
        Ok(WidthScale { num: num / g, den: den / g })
    }

    pub fn apply(self, channels: usize) -> usize {
        channels * self.num as usize / self.den as usize
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for WidthScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for WidthScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Spec(format!("width scale {s:?} is not of the form N or N/D"));
        let s = s.trim();
        match s.split_once('/') {
            Some((a, b)) => WidthScale::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => WidthScale::new(s.parse().map_err(|_| bad())?, 1),
        }
    }
}

/// One layer of the stream chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// `C(d, f, p)`, stride 1.
    Conv { d: usize, f: usize, p: usize },
    Relu,
    Lrn,
    /// 3×3 max pool, stride 2.
    Pool,
    Deconv { d: usize, f: usize, s: usize, p: usize },
}

/// `(d, f, p)` of the nine convolutions at full width.
pub const BASE_CONVS: [(usize, usize, usize); 9] = [
    (96, 7, 3),
    (256, 5, 2),
    (512, 3, 1),
    (512, 5, 2),
    (512, 5, 2),
    (256, 7, 3),
    (128, 11, 5),
    (32, 11, 5),
    (1, 13, 6),
];

pub const DECONV: LayerSpec = LayerSpec::Deconv { d: 1, f: 8, s: 4, p: 2 };
pub const DEFAULT_FUSION_LAYER: usize = 5;
pub const MAX_FUSION_LAYER: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkSpec {
    pub variant: Variant,
    /// Index (1-based) of the convolution after which the streams merge.
    pub fusion_layer: usize,
    pub width_scale: WidthScale,
    pub input_width: usize,
    pub input_height: usize,
}

impl NetworkSpec {
    pub fn new(variant: Variant) -> Self {
        NetworkSpec {
            variant,
            fusion_layer: DEFAULT_FUSION_LAYER,
            width_scale: WidthScale::FULL,
            input_width: 320,
            input_height: 240,
        }
    }

    pub fn with_fusion_layer(mut self, layer: usize) -> Self {
        self.fusion_layer = layer;
        self
    }

    pub fn with_width_scale(mut self, scale: WidthScale) -> Self {
        self.width_scale = scale;
        self
    }

    pub fn with_input_size(mut self, width: usize, height: usize) -> Self {
        self.input_width = width;
        self.input_height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_FUSION_LAYER).contains(&self.fusion_layer) {
            return Err(Error::Spec(format!(
                "fusion_layer must be in 1..={MAX_FUSION_LAYER}, got {}",
                self.fusion_layer
            )));
        }
        check_input_dims(self.input_width, self.input_height)?;
        for k in 1..=BASE_CONVS.len() {
            if self.conv_channels(k) == 0 {
                return Err(Error::Spec(format!(
                    "width scale {} leaves conv{k} ({} filters) with no channels",
                    self.width_scale,
                    BASE_CONVS[k - 1].0
                )));
            }
        }
        Ok(())
    }

    /// Output channels of convolution `k` (1-based). The last convolution
    /// always produces the single saliency channel.
    pub fn conv_channels(&self, k: usize) -> usize {
        if k == BASE_CONVS.len() {
            1
        } else {
            self.width_scale.apply(BASE_CONVS[k - 1].0)
        }
    }

    pub fn input_channels(&self) -> usize {
        match self.variant {
            Variant::STSDirectNet => 6,
            _ => 3,
        }
    }

    /// Layers that follow convolution `k`, starting with the conv itself.
    pub fn conv_block(&self, k: usize) -> Vec<LayerSpec> {
        let (_, f, p) = BASE_CONVS[k - 1];
        let mut block = vec![LayerSpec::Conv { d: self.conv_channels(k), f, p }];
        if k < BASE_CONVS.len() {
            block.push(LayerSpec::Relu);
        }
        match k {
            1 => block.extend([LayerSpec::Lrn, LayerSpec::Pool]),
            2 => block.push(LayerSpec::Pool),
            _ => {}
        }
        block
    }

    /// The full single-stream chain, ending in the deconvolution.
    pub fn layer_chain(&self) -> Vec<LayerSpec> {
        let mut chain: Vec<LayerSpec> = (1..=BASE_CONVS.len()).flat_map(|k| self.conv_block(k)).collect();
        chain.push(DECONV);
        chain
    }

    /// Versioned `key = value` text block stored in model files.
    pub fn to_text(&self) -> String {
        format!(
            "version = 1\nvariant = {}\nfusion_layer = {}\nwidth_scale = {}\ninput_size = {}x{}\n",
            self.variant, self.fusion_layer, self.width_scale, self.input_width, self.input_height
        )
    }
}

/// Network inputs must have both sides divisible by 4 and at least 8 pixels.
pub fn check_input_dims(width: usize, height: usize) -> Result<()> {
    if !width.is_multiple_of(4) || !height.is_multiple_of(4) || width < 8 || height < 8 {
        return Err(Error::Spec(format!(
            "input size {width}x{height} must have both sides divisible by 4 and >= 8"
        )));
    }
    Ok(())
}
