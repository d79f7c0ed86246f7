//! The six saliency network variants: layer chain, fusion, loss, training
//! and model files.

mod io;
mod loss;
mod model;
pub mod spec;
mod stream;
pub mod train;

pub use io::{decode_model, load_model, model_bytes, model_file_len, save_model, MODEL_VERSION};
pub use loss::euclidean_loss;
pub use model::{build_network, identity_fusion, Body, Fusion, FusionFeatures, InputMeans, Model};
pub use spec::{LayerSpec, NetworkSpec, Variant, WidthScale};
pub use stream::{Layer, Stream};
pub use train::{input_means, train, TargetScale, TrainConfig, TrainReport};
