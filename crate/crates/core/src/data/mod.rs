//! Dataset ingestion, fixation density ground truth, samples, multi-scale
//! augmentation and batching.

mod augment;
mod batch;
mod dataset;
mod density;
mod fixations;
mod sample;
mod source;
pub mod synthetic;

pub use augment::{augment_multiscale, augmented_sample, downscaled_inputs};
pub use batch::BatchIterator;
pub use dataset::{load_dataset, Dataset, Frame, Video};
pub use density::{default_sigma, density_from_fixations, DensityMap, TRUNCATION_SIGMAS};
pub use fixations::{
    fixations_csv_text, parse_fixations_csv, read_fixations_csv, Fixation, FixationSet, CSV_HEADER,
};
pub use sample::{
    cache_path, decode_sample, encode_sample, read_sample, read_sample_dir, write_sample, Provenance, Sample,
};
pub use source::{dataset_sources, video_sources, FrameSource, SampleConfig};
