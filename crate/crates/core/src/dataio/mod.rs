//! Dataset model, on-disk formats, synthetic data generation, and splitting.

mod features;
mod loaded;
mod manifest;
mod split;
mod synth;

pub use features::{load_features, save_features};
pub use loaded::LoadedDataset;
pub use manifest::{DatasetManifest, GroundTruthSegment, Split, VideoRecord};
pub use split::split_dataset;
pub use synth::{generate_synthetic, SyntheticConfig};
