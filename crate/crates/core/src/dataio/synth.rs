//! Deterministic synthetic dataset generation. Stands in for a pretrained
//! feature backbone: each class gets a Gaussian prototype vector, plus one
//! shared background prototype, and snippet features are the appropriate
//! prototype plus isotropic noise.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::features::save_features;
use super::manifest::{DatasetManifest, GroundTruthSegment, VideoRecord};
use super::split::split_dataset;
use crate::error::CoreError;
use crate::numcore::Matrix;
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    #[serde(rename = "N")]
    pub num_classes: usize,
    #[serde(rename = "D")]
    pub feature_dim: usize,
    pub video_count: usize,
    /// Inclusive snippet-count range per video.
    pub t_range: (usize, usize),
    pub segments_per_video_range: (usize, usize),
    pub segment_len_range: (usize, usize),
    pub noise_sigma: f64,
    pub prototype_scale: f64,
    pub seed: u64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.num_classes == 0 || self.feature_dim == 0 {
            return Err(CoreError::Config("N and D must be positive".into()));
        }
        for (name, (lo, hi)) in [
            ("t_range", self.t_range),
            ("segments_per_video_range", self.segments_per_video_range),
            ("segment_len_range", self.segment_len_range),
        ] {
            if lo > hi || hi == 0 {
                return Err(CoreError::Config(format!("{name} ({lo},{hi}) is empty")));
            }
        }
        let (v, t) = (self.val_fraction, self.test_fraction);
        if !(0.0..1.0).contains(&v) || !(0.0..1.0).contains(&t) || v + t >= 1.0 {
            return Err(CoreError::Config(format!(
                "split fractions val={v}, test={t} out of range"
            )));
        }
        if self.noise_sigma < 0.0 || self.prototype_scale <= 0.0 {
            return Err(CoreError::Config("bad noise/scale".into()));
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

/// Tries to place `lens` non-overlapping segments inside [0, t). Returns
/// inclusive (start, end) pairs sorted by start, or None if placement failed.
fn try_plant(rng: &mut impl Rng, t: usize, lens: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut placed: Vec<(usize, usize)> = Vec::with_capacity(lens.len());
    for &len in lens {
        if len > t {
            return None;
        }
        let mut ok = false;
        for _ in 0..50 {
            let start = rng.gen_range(0..=t - len);
            let end = start + len - 1;
            if placed.iter().all(|&(s, e)| end < s || start > e) {
                placed.push((start, end));
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    placed.sort_unstable();
    Some(placed)
}

/// Generates the dataset under `out_dir`: `manifest.json` plus one raw
/// feature file per video. Byte-identical output for the same config.
pub fn generate_synthetic(
    cfg: &SyntheticConfig,
    out_dir: &Path,
) -> Result<DatasetManifest, CoreError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| CoreError::io(out_dir.display().to_string(), e))?;

    let mut proto_rng = rng_from(derive_seed(cfg.seed, "synth-prototypes", 0));
    let class_protos: Vec<Vec<f64>> = (0..cfg.num_classes)
        .map(|_| gaussian_vec(&mut proto_rng, cfg.feature_dim, cfg.prototype_scale))
        .collect();
    let bg_proto = gaussian_vec(&mut proto_rng, cfg.feature_dim, cfg.prototype_scale);

    let mut videos = Vec::with_capacity(cfg.video_count);
    for vi in 0..cfg.video_count {
        let mut rng = rng_from(derive_seed(cfg.seed, "synth-video", vi as u64));
        let class = rng.gen_range(0..cfg.num_classes);

        let mut planted = None;
        for _ in 0..100 {
            let t = rng.gen_range(cfg.t_range.0..=cfg.t_range.1);
            let n_seg =
                rng.gen_range(cfg.segments_per_video_range.0..=cfg.segments_per_video_range.1);
            let lens: Vec<usize> = (0..n_seg)
                .map(|_| rng.gen_range(cfg.segment_len_range.0..=cfg.segment_len_range.1))
                .collect();
            if let Some(p) = try_plant(&mut rng, t, &lens) {
                planted = Some((t, p));
                break;
            }
        }
        let (t, segments) = planted.ok_or_else(|| {
            CoreError::Invalid(format!(
                "video {vi}: could not plant segments after 100 attempts"
            ))
        })?;

        let mut feat = Matrix::zeros(t, cfg.feature_dim);
        for snip in 0..t {
            let in_segment = segments.iter().any(|&(s, e)| snip >= s && snip <= e);
            let proto = if in_segment { &class_protos[class] } else { &bg_proto };
            let row = feat.row_mut(snip);
            for (j, &p) in proto.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                row[j] = p + z * cfg.noise_sigma;
            }
        }

        let id = format!("synth_{vi:05}");
        let feature_path = format!("{id}.bin");
        save_features(&out_dir.join(&feature_path), &feat)?;

        let mut y = vec![0.0; cfg.num_classes];
        y[class] = 1.0;
        videos.push(VideoRecord {
            id,
            num_snippets: t,
            y,
            gt_segments: segments
                .iter()
                .map(|&(start, end)| GroundTruthSegment {
                    start,
                    end,
                    class_id: class,
                })
                .collect(),
            feature_path,
        });
    }

    let mut manifest = DatasetManifest {
        name: "synthetic".into(),
        num_classes: cfg.num_classes,
        feature_dim: cfg.feature_dim,
        class_names: (0..cfg.num_classes).map(|c| format!("class_{c}")).collect(),
        videos,
        split: BTreeMap::new(),
    };
    split_dataset(
        &mut manifest,
        cfg.val_fraction,
        cfg.test_fraction,
        derive_seed(cfg.seed, "synth-split", 0),
    )?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SyntheticConfig {
        SyntheticConfig {
            num_classes: 3,
            feature_dim: 4,
            video_count: 6,
            t_range: (10, 20),
            segments_per_video_range: (1, 2),
            segment_len_range: (2, 4),
            noise_sigma: 0.1,
            prototype_scale: 1.0,
            seed: 11,
            val_fraction: 0.2,
            test_fraction: 0.2,
        }
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg();
        c.video_count = 0;
        c.val_fraction = 0.0;
        c.test_fraction = 0.0;
        let m = generate_synthetic(&c, dir.path()).unwrap();
        assert!(m.videos.is_empty());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1); // manifest only
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = generate_synthetic(&cfg(), d1.path()).unwrap();
        let m2 = generate_synthetic(&cfg(), d2.path()).unwrap();
        for v in &m1.videos {
            let b1 = fs::read(d1.path().join(&v.feature_path)).unwrap();
            let b2 = fs::read(d2.path().join(&v.feature_path)).unwrap();
            assert_eq!(b1, b2);
        }
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
    }

    #[test]
    fn zero_noise_snippets_equal_prototypes() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg();
        c.noise_sigma = 0.0;
        let m = generate_synthetic(&c, dir.path()).unwrap();
        m.validate(Some(dir.path())).unwrap();
        // all in-segment snippets of one class must be identical vectors
        let v = &m.videos[0];
        let feat =
            super::super::features::load_features(&dir.path().join(&v.feature_path), v.num_snippets, c.feature_dim)
                .unwrap();
        let g = &v.gt_segments[0];
        let first = feat.row(g.start).to_vec();
        for t in g.start..=g.end {
            assert_eq!(feat.row(t), &first[..]);
        }
    }

    #[test]
    fn gt_coverage_matches_planted_counts() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_synthetic(&cfg(), dir.path()).unwrap();
        for v in &m.videos {
            let planted: usize = v.gt_segments.iter().map(|g| g.end - g.start + 1).sum();
            assert!(planted <= v.num_snippets);
            // segments never overlap
            for (i, a) in v.gt_segments.iter().enumerate() {
                for b in &v.gt_segments[i + 1..] {
                    assert!(a.end < b.start || b.end < a.start);
                }
            }
        }
    }
}
