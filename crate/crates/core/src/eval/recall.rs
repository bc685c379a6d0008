//! Proposal recall metrics.
//!
//! Matching convention: each video's proposals are visited in score order and
//! each claims the unmatched ground-truth instance it overlaps most, provided
//! the IoU reaches the threshold and is strictly positive. A ground-truth
//! instance is counted at most once. Recall pools instances over all videos;
//! videos without annotations contribute nothing to the denominator.

use super::iou::{segment_iou, IoUGrid, Segment};
use crate::error::{Error, Result};

/// Proposals of one video, highest score first, paired with its ground truth.
#[derive(Debug, Clone, Copy)]
pub struct VideoEval<'a> {
    pub proposals: &'a [Segment],
    pub ground_truth: &'a [Segment],
}

/// Number of ground-truth segments matched one-to-one by the top `an` proposals.
pub fn matched_count(
    proposals: &[Segment],
    ground_truth: &[Segment],
    an: usize,
    threshold: f64,
) -> usize {
    let mut taken = vec![false; ground_truth.len()];
    let mut matched = 0;
    for &p in proposals.iter().take(an) {
        let mut best: Option<(usize, f64)> = None;
        for (g, &gt) in ground_truth.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let iou = segment_iou(p, gt);
            if iou > 0.0 && iou >= threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            matched += 1;
            if matched == ground_truth.len() {
                break;
            }
        }
    }
    matched
}

fn total_instances(videos: &[VideoEval<'_>]) -> usize {
    videos.iter().map(|v| v.ground_truth.len()).sum()
}

/// Pooled recall at each threshold using the top `an` proposals per video.
pub fn recall_vs_iou(videos: &[VideoEval<'_>], an: usize, iou_points: &[f64]) -> Vec<(f64, f64)> {
    let total = total_instances(videos);
    iou_points
        .iter()
        .map(|&thr| {
            if total == 0 {
                return (thr, 0.0);
            }
            let hits: usize = videos
                .iter()
                .map(|v| matched_count(v.proposals, v.ground_truth, an, thr))
                .sum();
            (thr, hits as f64 / total as f64)
        })
        .collect()
}

/// Mean recall over the grid with the top `an` proposals per video.
pub fn average_recall_at_an(videos: &[VideoEval<'_>], an: usize, grid: &IoUGrid) -> f64 {
    let recalls = recall_vs_iou(videos, an, grid.thresholds());
    recalls.iter().map(|(_, r)| r).sum::<f64>() / recalls.len() as f64
}

/// `(AN, AR)` for AN = 0..=an_max, with AR(0) = 0.
pub fn ar_an_curve(videos: &[VideoEval<'_>], an_max: usize, grid: &IoUGrid) -> Vec<(usize, f64)> {
    (0..=an_max)
        .map(|an| {
            let ar = if an == 0 {
                0.0
            } else {
                average_recall_at_an(videos, an, grid)
            };
            (an, ar)
        })
        .collect()
}

/// Trapezoidal area under an AR-AN curve sampled at consecutive integer AN, divided by its span.
pub fn curve_area(curve: &[(usize, f64)]) -> f64 {
    let (Some(first), Some(last)) = (curve.first(), curve.last()) else {
        return 0.0;
    };
    let span = (last.0 - first.0) as f64;
    if span == 0.0 {
        return 0.0;
    }
    curve
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0) as f64)
        .sum::<f64>()
        / span
}

/// Normalized area under the AR-AN curve for AN in `[0, an_max]`.
pub fn auc_ar_an(videos: &[VideoEval<'_>], an_max: usize, grid: &IoUGrid) -> Result<f64> {
    if an_max == 0 {
        return Err(Error::InvalidArgument("an_max must be >= 1".into()));
    }
    Ok(curve_area(&ar_an_curve(videos, an_max, grid)))
}
