//! Temporal IoU and average precision with the monotone-envelope
//! (all-point interpolated) convention.

use crate::dataio::GroundTruthSegment;
use crate::segpred::SegmentPrediction;

/// tIoU of two inclusive snippet intervals, treated as continuous extents
/// [start, end+1).
pub fn tiou(a: (usize, usize), b: (usize, usize)) -> f64 {
    let (a1, a2) = (a.0 as f64, a.1 as f64 + 1.0);
    let (b1, b2) = (b.0 as f64, b.1 as f64 + 1.0);
    let inter = (a2.min(b2) - a1.max(b1)).max(0.0);
    if inter == 0.0 {
        return 0.0;
    }
    let union = (a2 - a1) + (b2 - b1) - inter;
    inter / union
}

/// A ground truth instance with its owning video.
#[derive(Debug, Clone)]
pub struct GtInstance {
    pub video_id: String,
    pub segment: GroundTruthSegment,
}

/// Sorts predictions by descending score, ties broken by video id then start.
pub fn sort_predictions(predictions: &mut [&SegmentPrediction]) {
    predictions.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.video_id.cmp(&b.video_id))
            .then_with(|| a.start.cmp(&b.start))
    });
}

/// AP for one class at one tIoU threshold. Predictions are greedily matched
/// in score order to the highest-tIoU unmatched ground truth instance in the
/// same video; the precision-recall curve then gets the monotone envelope.
pub fn average_precision(
    predictions: &[&SegmentPrediction],
    gt: &[GtInstance],
    threshold: f64,
) -> f64 {
    if gt.is_empty() {
        return 0.0;
    }
    let mut preds: Vec<&SegmentPrediction> = predictions.to_vec();
    sort_predictions(&mut preds);

    let mut matched = vec![false; gt.len()];
    let mut tp_flags = Vec::with_capacity(preds.len());
    for p in &preds {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gt.iter().enumerate() {
            if matched[gi] || g.video_id != p.video_id {
                continue;
            }
            let ov = tiou((p.start, p.end), (g.segment.start, g.segment.end));
            if ov >= threshold && best.map_or(true, |(_, b)| ov > b) {
                best = Some((gi, ov));
            }
        }
        match best {
            Some((gi, _)) => {
                matched[gi] = true;
                tp_flags.push(true);
            }
            None => tp_flags.push(false),
        }
    }

    ap_from_tp_flags(&tp_flags, gt.len())
}

/// Area under the enveloped precision-recall curve, summed over recall steps.
pub fn ap_from_tp_flags(tp_flags: &[bool], num_gt: usize) -> f64 {
    let mut precision = Vec::with_capacity(tp_flags.len());
    let mut recall = Vec::with_capacity(tp_flags.len());
    let mut tp = 0usize;
    for (i, &is_tp) in tp_flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        precision.push(tp as f64 / (i + 1) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    // monotone envelope from the right
    for i in (0..precision.len().saturating_sub(1)).rev() {
        if precision[i] < precision[i + 1] {
            precision[i] = precision[i + 1];
        }
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for i in 0..recall.len() {
        if recall[i] > prev_recall {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    ap
}
