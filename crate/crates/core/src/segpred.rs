//! Post-processes model outputs into scored temporal segment predictions:
//! threshold the background attention and the per-class scores, group the
//! surviving snippets (tolerating single-snippet gaps), score each run on
//! its pre-inflation extent, then inflate the extents.

use serde::{Deserialize, Serialize};

use crate::wstal::{ForwardMaps, BACKGROUND};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PostprocConfig {
    /// Snippets whose background attention exceeds this are filtered out.
    pub alpha_a: f64,
    /// Snippets whose class probability falls below this are filtered out.
    pub alpha_c: f64,
    /// Number of top video-label classes to emit predictions for.
    pub top_k: usize,
    /// Kept snippets separated by at most this many filtered-out snippets
    /// belong to the same segment.
    pub gap_tolerance: usize,
    /// Snippets added at both ends of each segment, clamped to the video.
    pub inflation: usize,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        PostprocConfig {
            alpha_a: 0.5,
            alpha_c: 0.005,
            top_k: 2,
            gap_tolerance: 1,
            inflation: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SegmentPrediction {
    pub video_id: String,
    pub start: usize,
    pub end: usize,
    pub class_id: usize,
    pub score: f64,
}

/// Keep snippets whose background attention is <= alpha_a (boundary kept).
pub fn foreground_mask(maps: &ForwardMaps, alpha_a: f64) -> Vec<bool> {
    (0..maps.attention_time.len())
        .map(|t| maps.attention_bf.get(t, BACKGROUND) <= alpha_a)
        .collect()
}

/// Keep snippets whose probability for class `class_id` is >= alpha_c.
pub fn class_mask(maps: &ForwardMaps, class_id: usize, alpha_c: f64) -> Vec<bool> {
    (0..maps.class_probs.rows())
        .map(|t| maps.class_probs.get(t, class_id) >= alpha_c)
        .collect()
}

/// Maximal runs of kept snippets; two kept snippets with at most
/// `gap_tolerance` filtered-out snippets between them share a segment.
/// Endpoints are always kept snippets.
pub fn group_segments(mask: &[bool], gap_tolerance: usize) -> Vec<(usize, usize)> {
    let mut segments = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for (t, &kept) in mask.iter().enumerate() {
        if !kept {
            continue;
        }
        current = match current {
            Some((start, end)) if t - end <= gap_tolerance + 1 => Some((start, t)),
            Some(done) => {
                segments.push(done);
                Some((t, t))
            }
            None => Some((t, t)),
        };
    }
    if let Some(done) = current {
        segments.push(done);
    }
    segments
}

/// Mean over the un-inflated extent of (time attention + class probability),
/// plus the video-level score of the class.
pub fn score_segment(
    maps: &ForwardMaps,
    segment: (usize, usize),
    class_id: usize,
) -> f64 {
    let (t1, t2) = segment;
    let mut acc = 0.0;
    for t in t1..=t2 {
        acc += maps.attention_time[t] + maps.class_probs.get(t, class_id);
    }
    acc / (t2 - t1 + 1) as f64 + maps.video_probs[class_id]
}

pub fn inflate(segment: (usize, usize), inflation: usize, num_snippets: usize) -> (usize, usize) {
    let (t1, t2) = segment;
    (
        t1.saturating_sub(inflation),
        (t2 + inflation).min(num_snippets - 1),
    )
}

/// Classes ordered by descending video score, ties broken by lower index.
fn top_classes(video_probs: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..video_probs.len()).collect();
    order.sort_by(|&a, &b| {
        video_probs[b]
            .partial_cmp(&video_probs[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// The full prediction pipeline for one video. Predictions from different
/// top-k classes may overlap; no cross-class suppression is applied.
pub fn predict_segments(
    maps: &ForwardMaps,
    video_id: &str,
    cfg: &PostprocConfig,
) -> Vec<SegmentPrediction> {
    let t = maps.attention_time.len();
    let fg_mask = foreground_mask(maps, cfg.alpha_a);
    let mut out = Vec::new();
    for class_id in top_classes(&maps.video_probs, cfg.top_k) {
        let c_mask = class_mask(maps, class_id, cfg.alpha_c);
        let combined: Vec<bool> = fg_mask.iter().zip(&c_mask).map(|(&a, &b)| a && b).collect();
        for segment in group_segments(&combined, cfg.gap_tolerance) {
            let score = score_segment(maps, segment, class_id);
            let (start, end) = inflate(segment, cfg.inflation, t);
            out.push(SegmentPrediction {
                video_id: video_id.to_string(),
                start,
                end,
                class_id,
                score,
            });
        }
    }
    out
}
