use std::collections::BTreeMap;
use std::path::Path;

use super::features::load_features;
use super::manifest::DatasetManifest;
use crate::error::CoreError;
use crate::numcore::Matrix;

/// A manifest with every feature file resident in memory, keyed by video id.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    pub features: BTreeMap<String, Matrix>,
}

impl LoadedDataset {
    /// Loads `manifest.json` plus all feature files from a dataset directory.
    pub fn load(dir: &Path) -> Result<Self, CoreError> {
        let manifest = DatasetManifest::load(&dir.join("manifest.json"))?;
        manifest.validate(Some(dir))?;
        Self::from_manifest(manifest, dir)
    }

    pub fn from_manifest(manifest: DatasetManifest, dir: &Path) -> Result<Self, CoreError> {
        let mut features = BTreeMap::new();
        for v in &manifest.videos {
            let m = load_features(&dir.join(&v.feature_path), v.num_snippets, manifest.feature_dim)?;
            features.insert(v.id.clone(), m);
        }
        Ok(LoadedDataset { manifest, features })
    }

    pub fn features_of(&self, video_id: &str) -> &Matrix {
        &self.features[video_id]
    }
}
