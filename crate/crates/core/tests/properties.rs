//! Randomized and exhaustive checks against independently written oracles.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refineloc_core::dataio::GroundTruthSegment;
use refineloc_core::evalkit::{average_precision, tiou, GtInstance};
use refineloc_core::pseudogen::{round_half_up, sample_pseudo};
use refineloc_core::segpred::{group_segments, inflate, SegmentPrediction};

// ---------------------------------------------------------------------------
// grouping vs an exhaustive run-splitting oracle

/// Independent re-derivation: kept indices split wherever the run of
/// filtered-out snippets strictly between two consecutive kept indices is
/// longer than the tolerance.
fn grouping_oracle(mask: &[bool], gap_tolerance: usize) -> Vec<(usize, usize)> {
    let kept: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < kept.len() {
        let start = kept[i];
        let mut j = i;
        while j + 1 < kept.len() {
            let falses_between = kept[j + 1] - kept[j] - 1;
            if falses_between > gap_tolerance {
                break;
            }
            j += 1;
        }
        out.push((start, kept[j]));
        i = j + 1;
    }
    out
}

#[test]
fn grouping_matches_oracle_for_all_masks_up_to_t12() {
    for t in 1..=12usize {
        for bits in 0..(1u32 << t) {
            let mask: Vec<bool> = (0..t).map(|i| bits >> i & 1 == 1).collect();
            for gap in 0..=2usize {
                assert_eq!(
                    group_segments(&mask, gap),
                    grouping_oracle(&mask, gap),
                    "mask={mask:?} gap={gap}"
                );
            }
        }
    }
}

// ---------------------------------------------------------------------------
// average precision vs a from-scratch precision/recall oracle

fn pr_oracle(preds: &[SegmentPrediction], gts: &[GtInstance], threshold: f64) -> f64 {
    if gts.is_empty() {
        return 0.0;
    }
    // same ranking convention: score desc, then video id, then start
    let mut order: Vec<&SegmentPrediction> = preds.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.video_id.cmp(&b.video_id))
            .then_with(|| a.start.cmp(&b.start))
    });

    // integer-arithmetic overlap on [start, end+1)
    let overlap = |p: &SegmentPrediction, g: &GtInstance| -> f64 {
        let (p1, p2) = (p.start as i64, p.end as i64 + 1);
        let (g1, g2) = (g.segment.start as i64, g.segment.end as i64 + 1);
        let inter = (p2.min(g2) - p1.max(g1)).max(0);
        if inter == 0 {
            return 0.0;
        }
        let union = (p2 - p1) + (g2 - g1) - inter;
        inter as f64 / union as f64
    };

    let mut taken = vec![false; gts.len()];
    let mut tps: Vec<bool> = Vec::new();
    for p in &order {
        let mut best_gi = None;
        let mut best_ov = -1.0;
        for (gi, g) in gts.iter().enumerate() {
            if taken[gi] || g.video_id != p.video_id {
                continue;
            }
            let ov = overlap(p, g);
            if ov >= threshold && ov > best_ov {
                best_ov = ov;
                best_gi = Some(gi);
            }
        }
        if let Some(gi) = best_gi {
            taken[gi] = true;
            tps.push(true);
        } else {
            tps.push(false);
        }
    }

    // AP = (1/|gt|) * sum over TP positions of the best precision achieved at
    // that recall level or beyond (the interpolated convention, computed
    // without building the enveloped curve)
    let cum_tp: Vec<usize> = tps
        .iter()
        .scan(0usize, |acc, &t| {
            *acc += t as usize;
            Some(*acc)
        })
        .collect();
    let mut ap = 0.0;
    for (i, &is_tp) in tps.iter().enumerate() {
        if !is_tp {
            continue;
        }
        let mut best_prec = 0.0f64;
        for j in i..tps.len() {
            best_prec = best_prec.max(cum_tp[j] as f64 / (j + 1) as f64);
        }
        ap += best_prec;
    }
    ap / gts.len() as f64
}

#[test]
fn average_precision_matches_pr_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..500 {
        let num_gt = rng.gen_range(1..=8);
        let num_pred = rng.gen_range(0..=20);
        let num_videos = rng.gen_range(1..=3);
        let gts: Vec<GtInstance> = (0..num_gt)
            .map(|_| {
                let s = rng.gen_range(0..60);
                GtInstance {
                    video_id: format!("v{}", rng.gen_range(0..num_videos)),
                    segment: GroundTruthSegment {
                        start: s,
                        end: s + rng.gen_range(0..15),
                        class_id: 0,
                    },
                }
            })
            .collect();
        // distinct scores so the ranking is unambiguous
        let mut scores: Vec<f64> = (0..num_pred).map(|i| (i + 1) as f64 / 100.0).collect();
        for i in (1..scores.len()).rev() {
            scores.swap(i, rng.gen_range(0..=i));
        }
        let preds: Vec<SegmentPrediction> = scores
            .into_iter()
            .map(|score| {
                let s = rng.gen_range(0..60);
                SegmentPrediction {
                    video_id: format!("v{}", rng.gen_range(0..num_videos)),
                    start: s,
                    end: s + rng.gen_range(0..18),
                    class_id: 0,
                    score,
                }
            })
            .collect();
        for &thr in &[0.1, 0.3, 0.5, 0.75, 0.95] {
            let refs: Vec<&SegmentPrediction> = preds.iter().collect();
            let got = average_precision(&refs, &gts, thr);
            let want = pr_oracle(&preds, &gts, thr);
            assert!(
                (got - want).abs() <= 1e-12,
                "case {case} thr {thr}: {got} vs {want}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// proptest invariants

fn arb_segments() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..50, 0usize..12), 0..10).prop_map(|raw| {
        let mut segs: Vec<(usize, usize)> = raw.into_iter().map(|(s, l)| (s, s + l)).collect();
        segs.sort();
        segs
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tiou_is_symmetric_and_bounded(a1 in 0usize..100, al in 0usize..20,
                                     b1 in 0usize..100, bl in 0usize..20) {
        let a = (a1, a1 + al);
        let b = (b1, b1 + bl);
        let ab = tiou(a, b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, tiou(b, a));
        prop_assert_eq!(tiou(a, a), 1.0);
    }

    #[test]
    fn ap_invariant_under_monotone_score_transform(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gts: Vec<GtInstance> = (0..rng.gen_range(1..6))
            .map(|_| {
                let s = rng.gen_range(0..40);
                GtInstance {
                    video_id: "v".into(),
                    segment: GroundTruthSegment { start: s, end: s + rng.gen_range(0..10), class_id: 0 },
                }
            })
            .collect();
        let preds: Vec<SegmentPrediction> = (0..rng.gen_range(0..15))
            .map(|i| {
                let s = rng.gen_range(0..40);
                SegmentPrediction {
                    video_id: "v".into(),
                    start: s,
                    end: s + rng.gen_range(0..12),
                    class_id: 0,
                    score: (i + 1) as f64 * 0.01,
                }
            })
            .collect();
        let transformed: Vec<SegmentPrediction> = preds
            .iter()
            .map(|p| SegmentPrediction { score: 3.0 * p.score + 7.0, ..p.clone() })
            .collect();
        let a: Vec<&SegmentPrediction> = preds.iter().collect();
        let b: Vec<&SegmentPrediction> = transformed.iter().collect();
        prop_assert_eq!(average_precision(&a, &gts, 0.5), average_precision(&b, &gts, 0.5));
    }

    #[test]
    fn inflation_preserves_order_and_contains_original(
        segs in arb_segments(), inflation in 0usize..5
    ) {
        let t = segs.iter().map(|&(_, e)| e + 1).max().unwrap_or(1) + 3;
        let inflated: Vec<(usize, usize)> =
            segs.iter().map(|&s| inflate(s, inflation, t)).collect();
        prop_assert_eq!(inflated.len(), segs.len());
        for (&(s, e), &(is, ie)) in segs.iter().zip(&inflated) {
            prop_assert!(is <= s && ie >= e);
            prop_assert!(ie < t);
            prop_assert!(s - is <= inflation && ie - e <= inflation);
        }
        // relative order of starts is preserved
        for w in inflated.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
        }
    }

    #[test]
    fn grouped_segments_are_disjoint_with_kept_endpoints(
        mask in prop::collection::vec(any::<bool>(), 1..40),
        gap in 0usize..3,
    ) {
        let segs = group_segments(&mask, gap);
        for &(s, e) in &segs {
            prop_assert!(s <= e);
            prop_assert!(mask[s] && mask[e]);
        }
        for w in segs.windows(2) {
            // separated by a run of filtered snippets longer than the gap
            prop_assert!(w[1].0 > w[0].1 + gap + 1);
        }
        let covered: usize = segs
            .iter()
            .map(|&(s, e)| mask[s..=e].iter().filter(|&&k| k).count())
            .sum();
        prop_assert_eq!(covered, mask.iter().filter(|&&k| k).count());
    }

    #[test]
    fn sampling_count_is_exact(t in 1usize..200, frac_pct in 0usize..=100, seed in any::<u64>()) {
        let fraction = frac_pct as f64 / 100.0;
        let mask = sample_pseudo(t, fraction, seed);
        let expected = round_half_up(fraction * t as f64).min(t);
        prop_assert_eq!(mask.iter().filter(|&&s| s).count(), expected);
        let again = sample_pseudo(t, fraction, seed);
        prop_assert_eq!(mask, again);
    }
}
