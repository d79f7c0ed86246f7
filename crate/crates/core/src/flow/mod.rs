//! Temporal-stream input: optical flow between consecutive frames, estimated
//! or read from `.flo` files, encoded as 3-channel flow images.

mod field;
pub mod flo;
mod horn_schunck;
mod image;

pub use field::{rescale_flow, resize_flow, FlowField};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_TAG};
pub use horn_schunck::{estimate_flow, to_gray, FlowEstimate, HornSchunck};
pub use image::{flow_to_image, FlowImage, DEFAULT_CLIP_BOUND};
