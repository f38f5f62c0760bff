//! Detection evaluation: per-class AP at a grid of tIoU thresholds, mAP,
//! average mAP, and a simplified false-positive breakdown.

mod ap;

pub use ap::{ap_from_tp_flags, average_precision, sort_predictions, tiou, GtInstance};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::DatasetManifest;
use crate::error::CoreError;
use crate::segpred::SegmentPrediction;

/// The standard threshold grid 0.5:0.05:0.95 (10 entries).
pub fn default_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

fn threshold_key(t: f64) -> String {
    format!("{t:.2}")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub true_positive: u64,
    pub localization: u64,
    pub confusion: u64,
    pub background: u64,
    pub double_detection: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// threshold ("0.50") -> class id ("3") -> AP.
    pub per_class_ap: BTreeMap<String, BTreeMap<String, f64>>,
    /// threshold ("0.50") -> mAP over classes with ground truth.
    pub map_per_threshold: BTreeMap<String, f64>,
    pub average_map: f64,
    /// Categorized at tIoU threshold 0.5.
    pub error_breakdown: ErrorBreakdown,
}

impl EvalReport {
    pub fn map_at(&self, threshold: f64) -> Option<f64> {
        self.map_per_threshold.get(&threshold_key(threshold)).copied()
    }
}

/// Evaluates predictions against the manifest's ground truth. Classes with
/// no ground truth instance are excluded from mAP.
pub fn evaluate(
    predictions: &[SegmentPrediction],
    manifest: &DatasetManifest,
    thresholds: &[f64],
) -> Result<EvalReport, CoreError> {
    evaluate_on(predictions, manifest, thresholds, None)
}

/// Same as `evaluate` but restricted to the named videos (e.g. a test split).
pub fn evaluate_on(
    predictions: &[SegmentPrediction],
    manifest: &DatasetManifest,
    thresholds: &[f64],
    video_ids: Option<&[&str]>,
) -> Result<EvalReport, CoreError> {
    let mut gt_by_class: BTreeMap<usize, Vec<GtInstance>> = BTreeMap::new();
    for v in &manifest.videos {
        if let Some(ids) = video_ids {
            if !ids.contains(&v.id.as_str()) {
                continue;
            }
        }
        for g in &v.gt_segments {
            gt_by_class.entry(g.class_id).or_default().push(GtInstance {
                video_id: v.id.clone(),
                segment: *g,
            });
        }
    }
    if gt_by_class.is_empty() {
        return Err(CoreError::Invalid(
            "nothing to evaluate: no ground truth segments".into(),
        ));
    }

    let mut per_class_ap: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut map_per_threshold = BTreeMap::new();
    for &thr in thresholds {
        let mut class_aps = BTreeMap::new();
        let mut sum = 0.0;
        for (&class_id, gts) in &gt_by_class {
            let preds: Vec<&SegmentPrediction> = predictions
                .iter()
                .filter(|p| p.class_id == class_id)
                .collect();
            let ap = average_precision(&preds, gts, thr);
            class_aps.insert(class_id.to_string(), ap);
            sum += ap;
        }
        map_per_threshold.insert(threshold_key(thr), sum / gt_by_class.len() as f64);
        per_class_ap.insert(threshold_key(thr), class_aps);
    }
    let average_map = map_per_threshold.values().sum::<f64>() / thresholds.len() as f64;

    Ok(EvalReport {
        per_class_ap,
        map_per_threshold,
        average_map,
        error_breakdown: error_breakdown(predictions, &gt_by_class, 0.5),
    })
}

/// Categorizes every prediction in score order at a fixed tIoU threshold.
/// Categories, applied in order: true positive (greedy match to an unmatched
/// same-class instance), double detection (covers an already-matched
/// same-class instance), localization (same-class overlap below threshold),
/// confusion (overlaps a different-class instance), background (no overlap
/// with anything).
fn error_breakdown(
    predictions: &[SegmentPrediction],
    gt_by_class: &BTreeMap<usize, Vec<GtInstance>>,
    threshold: f64,
) -> ErrorBreakdown {
    let mut matched: BTreeMap<usize, Vec<bool>> = gt_by_class
        .iter()
        .map(|(&c, v)| (c, vec![false; v.len()]))
        .collect();
    let mut order: Vec<&SegmentPrediction> = predictions.iter().collect();
    sort_predictions(&mut order);

    let mut out = ErrorBreakdown::default();
    for p in order {
        let same_class = gt_by_class.get(&p.class_id);
        let mut best: Option<(usize, f64)> = None;
        let mut best_matched_overlap = 0.0f64;
        let mut best_same_overlap = 0.0f64;
        if let Some(gts) = same_class {
            let flags = &matched[&p.class_id];
            for (gi, g) in gts.iter().enumerate() {
                if g.video_id != p.video_id {
                    continue;
                }
                let ov = tiou((p.start, p.end), (g.segment.start, g.segment.end));
                best_same_overlap = best_same_overlap.max(ov);
                if flags[gi] {
                    best_matched_overlap = best_matched_overlap.max(ov);
                } else if ov >= threshold && best.map_or(true, |(_, b)| ov > b) {
                    best = Some((gi, ov));
                }
            }
        }
        if let Some((gi, _)) = best {
            matched.get_mut(&p.class_id).unwrap()[gi] = true;
            out.true_positive += 1;
            continue;
        }
        if best_matched_overlap >= threshold {
            out.double_detection += 1;
            continue;
        }
        if best_same_overlap > 0.0 {
            out.localization += 1;
            continue;
        }
        let mut best_other = 0.0f64;
        for (&c, gts) in gt_by_class {
            if c == p.class_id {
                continue;
            }
            for g in gts {
                if g.video_id == p.video_id {
                    best_other =
                        best_other.max(tiou((p.start, p.end), (g.segment.start, g.segment.end)));
                }
            }
        }
        if best_other > 0.0 {
            out.confusion += 1;
        } else {
            out.background += 1;
        }
    }
    out
}
