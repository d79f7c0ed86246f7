//! Spatio-temporal saliency networks for video.
//!
//! A from-scratch tensor engine ([`ops`], [`optim`]) drives six network
//! variants ([`nets`]) over RGB frames and optical-flow images ([`flow`]),
//! trained on fixation density maps ([`data`]) and scored with the standard
//! fixation metrics ([`metrics`]).

pub mod data;
pub mod error;
pub mod flow;
pub mod gradcheck;
pub mod imageio;
pub mod map;
pub mod metrics;
pub mod nets;
pub mod ops;
pub mod optim;
pub mod par;
pub mod predict;
pub mod resample;
pub mod tensor;
pub mod weights;

pub use error::{Error, Result};
pub use map::Map;
pub use tensor::{Real, Tensor};
