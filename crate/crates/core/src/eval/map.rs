//! Mean average precision for class-labeled detections.
//!
//! Detections of a class are ranked by score across all videos (stable for
//! ties) and each is matched to the highest-IoU unmatched ground truth of the
//! same class and video with IoU at least the threshold. AP uses all-points
//! interpolation. Classes that never appear in the ground truth are skipped,
//! so detections of unknown classes do not affect the mean.

use std::collections::BTreeMap;

use super::iou::{segment_iou, Segment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Index into the per-video ground-truth list.
    pub video: usize,
    pub segment: Segment,
    pub score: f64,
    pub class_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSegment {
    pub segment: Segment,
    pub class_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub per_class: BTreeMap<u32, f64>,
    pub mean: f64,
}

/// All-points interpolated AP from hit flags in rank order.
pub fn average_precision(hits: &[bool], positives: usize) -> f64 {
    if positives == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (rank, &hit) in hits.iter().enumerate() {
        tp += usize::from(hit);
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    hits.iter()
        .zip(&precision)
        .filter(|(&h, _)| h)
        .fold(0.0, |acc, (_, &p)| acc + p)
        / positives as f64
}

pub fn map_at_iou(
    detections: &[Detection],
    ground_truth: &[Vec<LabeledSegment>],
    iou_threshold: f64,
) -> MapResult {
    let mut positives: BTreeMap<u32, usize> = BTreeMap::new();
    for gt in ground_truth.iter().flatten() {
        *positives.entry(gt.class_id).or_default() += 1;
    }

    let mut per_class = BTreeMap::new();
    for (&class, &count) in &positives {
        let mut ranked: Vec<&Detection> = detections
            .iter()
            .filter(|d| d.class_id == class && d.video < ground_truth.len())
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score));

        let mut taken: Vec<Vec<bool>> = ground_truth.iter().map(|g| vec![false; g.len()]).collect();
        let hits: Vec<bool> = ranked
            .iter()
            .map(|d| {
                let mut best: Option<(usize, f64)> = None;
                for (g, gt) in ground_truth[d.video].iter().enumerate() {
                    if gt.class_id != class || taken[d.video][g] {
                        continue;
                    }
                    let iou = segment_iou(d.segment, gt.segment);
                    if iou > 0.0 && iou >= iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                        best = Some((g, iou));
                    }
                }
                match best {
                    Some((g, _)) => {
                        taken[d.video][g] = true;
                        true
                    }
                    None => false,
                }
            })
            .collect();
        per_class.insert(class, average_precision(&hits, count));
    }

    let mean = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().fold(0.0, |a, b| a + b) / per_class.len() as f64
    };
    MapResult { per_class, mean }
}
