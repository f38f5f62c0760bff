//! Pseudo ground truth: five strategies for fabricating snippet-level
//! background/foreground labels from a trained model's own outputs, plus the
//! sampling step that fixes the supervised subset once per refinement
//! iteration.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::segpred::SegmentPrediction;
use crate::seeding::rng_from;
use crate::wstal::ForwardMaps;

/// Per-snippet background/foreground assignments plus the sampling mask
/// selecting which snippets the pseudo loss applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoLabels {
    pub video_id: String,
    /// true = foreground.
    pub foreground: Vec<bool>,
    pub sample_mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    UniformRandom,
    /// Bernoulli with the true average foreground ratio. Needs strong
    /// annotations, so it is a baseline reference only.
    DistributionAware { ratio: Option<f64> },
    /// Threshold on max class probability per snippet. Default threshold is
    /// the video's mean of that maximum (adaptive).
    ClassActivation { threshold: Option<f64> },
    /// Threshold on the over-time foreground attention. Default threshold is
    /// the uniform level 1/T.
    Attention { threshold: Option<f64> },
    /// Foreground wherever any segment prediction covers the snippet.
    SegmentPrediction,
}

impl GeneratorKind {
    pub fn validate(&self) -> Result<(), CoreError> {
        let check = |v: Option<f64>, name: &str| {
            if let Some(x) = v {
                if !(0.0..=1.0).contains(&x) {
                    return Err(CoreError::Config(format!("{name} {x} outside [0,1]")));
                }
            }
            Ok(())
        };
        match self {
            GeneratorKind::DistributionAware { ratio } => check(*ratio, "ratio"),
            GeneratorKind::ClassActivation { threshold } => check(*threshold, "threshold"),
            GeneratorKind::Attention { threshold } => check(*threshold, "threshold"),
            _ => Ok(()),
        }
    }
}

pub fn gen_uniform(num_snippets: usize, seed: u64) -> Vec<bool> {
    let mut rng = rng_from(seed);
    (0..num_snippets).map(|_| rng.gen_bool(0.5)).collect()
}

pub fn gen_distribution_aware(num_snippets: usize, ratio: f64, seed: u64) -> Vec<bool> {
    let mut rng = rng_from(seed);
    (0..num_snippets).map(|_| rng.gen_bool(ratio)).collect()
}

/// Foreground iff max class probability of the snippet is >= threshold.
pub fn gen_class_activation(maps: &ForwardMaps, threshold: f64) -> Vec<bool> {
    max_class_probs(maps).iter().map(|&m| m >= threshold).collect()
}

/// Adaptive default threshold for the class-activation generator: the
/// video's mean of max class probability.
pub fn class_activation_default_threshold(maps: &ForwardMaps) -> f64 {
    let maxes = max_class_probs(maps);
    maxes.iter().sum::<f64>() / maxes.len() as f64
}

fn max_class_probs(maps: &ForwardMaps) -> Vec<f64> {
    (0..maps.class_probs.rows())
        .map(|t| {
            maps.class_probs
                .row(t)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Foreground iff the over-time foreground attention is >= threshold.
pub fn gen_attention(maps: &ForwardMaps, threshold: f64) -> Vec<bool> {
    maps.attention_time.iter().map(|&a| a >= threshold).collect()
}

/// Foreground iff covered by any prediction, regardless of class.
pub fn gen_segment_prediction(
    predictions: &[SegmentPrediction],
    num_snippets: usize,
) -> Result<Vec<bool>, CoreError> {
    let mut labels = vec![false; num_snippets];
    for p in predictions {
        if p.end >= num_snippets || p.start > p.end {
            return Err(CoreError::Invalid(format!(
                "prediction ({},{}) out of range for T={num_snippets}",
                p.start, p.end
            )));
        }
        for l in &mut labels[p.start..=p.end] {
            *l = true;
        }
    }
    Ok(labels)
}

/// Round-half-up, used to turn the sampling fraction into a count.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Selects exactly round(S·T) snippet indices uniformly without replacement.
pub fn sample_pseudo(num_snippets: usize, fraction: f64, seed: u64) -> Vec<bool> {
    let k = round_half_up(fraction * num_snippets as f64).min(num_snippets);
    let mut idx: Vec<usize> = (0..num_snippets).collect();
    idx.shuffle(&mut rng_from(seed));
    let mut mask = vec![false; num_snippets];
    for &i in idx.iter().take(k) {
        mask[i] = true;
    }
    mask
}

/// Audit record written to pseudo.jsonl, labels and mask as 0/1 arrays.
#[derive(Debug, Serialize, Deserialize)]
pub struct PseudoDumpRecord {
    pub video_id: String,
    pub labels: Vec<u8>,
    pub sample_mask: Vec<u8>,
}

impl From<&PseudoLabels> for PseudoDumpRecord {
    fn from(p: &PseudoLabels) -> Self {
        PseudoDumpRecord {
            video_id: p.video_id.clone(),
            labels: p.foreground.iter().map(|&b| b as u8).collect(),
            sample_mask: p.sample_mask.iter().map(|&b| b as u8).collect(),
        }
    }
}
