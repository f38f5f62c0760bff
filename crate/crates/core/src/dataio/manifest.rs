use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One planted or annotated action instance, in inclusive snippet indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSegment {
    pub start: usize,
    pub end: usize,
    pub class_id: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    #[serde(rename = "T")]
    pub num_snippets: usize,
    /// Video-level weak label, a distribution over the N classes.
    pub y: Vec<f64>,
    /// Strong annotations, used only for evaluation and the
    /// distribution-aware baseline generator.
    pub gt_segments: Vec<GroundTruthSegment>,
    pub feature_path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    #[serde(rename = "N")]
    pub num_classes: usize,
    #[serde(rename = "D")]
    pub feature_dim: usize,
    pub class_names: Vec<String>,
    pub videos: Vec<VideoRecord>,
    pub split: BTreeMap<String, Split>,
}

impl DatasetManifest {
    /// Checks every record invariant. `base_dir` anchors feature paths; pass
    /// `None` to skip the on-disk file checks (e.g. for in-memory datasets).
    pub fn validate(&self, base_dir: Option<&Path>) -> Result<(), CoreError> {
        if self.class_names.len() != self.num_classes {
            return Err(CoreError::Invalid(format!(
                "manifest has {} class names but N={}",
                self.class_names.len(),
                self.num_classes
            )));
        }
        let mut seen = HashSet::new();
        for v in &self.videos {
            if !seen.insert(v.id.as_str()) {
                return Err(CoreError::Invalid(format!("duplicate video id {}", v.id)));
            }
            if v.y.len() != self.num_classes {
                return Err(CoreError::Invalid(format!(
                    "video {}: label has {} entries, expected {}",
                    v.id,
                    v.y.len(),
                    self.num_classes
                )));
            }
            let ysum: f64 = v.y.iter().sum();
            if (ysum - 1.0).abs() > 1e-6 || v.y.iter().any(|&p| p < 0.0) {
                return Err(CoreError::Invalid(format!(
                    "video {}: weak label is not a distribution (sum {ysum})",
                    v.id
                )));
            }
            for g in &v.gt_segments {
                if g.start > g.end || g.end >= v.num_snippets {
                    return Err(CoreError::Invalid(format!(
                        "video {}: gt segment ({},{}) out of range for T={}",
                        v.id, g.start, g.end, v.num_snippets
                    )));
                }
                if g.class_id >= self.num_classes {
                    return Err(CoreError::Invalid(format!(
                        "video {}: gt class {} out of range",
                        v.id, g.class_id
                    )));
                }
            }
            if let Some(dir) = base_dir {
                let path = dir.join(&v.feature_path);
                let expected = 4 * v.num_snippets * self.feature_dim;
                let meta = fs::metadata(&path)
                    .map_err(|e| CoreError::io(path.display().to_string(), e))?;
                if meta.len() as usize != expected {
                    return Err(CoreError::Format(format!(
                        "video {}: feature file {} has {} bytes, expected {}",
                        v.id,
                        path.display(),
                        meta.len(),
                        expected
                    )));
                }
            }
        }
        for id in self.split.keys() {
            if !self.videos.iter().any(|v| &v.id == id) {
                return Err(CoreError::Invalid(format!(
                    "split references unknown video id {id}"
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CoreError> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, CoreError> {
        let text =
            fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.id == id)
    }

    /// Videos assigned to `split`, in manifest order.
    pub fn videos_in(&self, split: Split) -> Vec<&VideoRecord> {
        self.videos
            .iter()
            .filter(|v| self.split.get(&v.id) == Some(&split))
            .collect()
    }

    pub fn feature_file(&self, base_dir: &Path, record: &VideoRecord) -> PathBuf {
        base_dir.join(&record.feature_path)
    }
}
