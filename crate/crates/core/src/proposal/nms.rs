use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::candidates::mid_index;
use crate::eval::segment_iou;

/// A scored candidate segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub start: usize,
    pub end: usize,
    pub mid: usize,
    /// Ranking score; equals `p_start * p_end * phi` until soft-NMS decays it.
    pub score: f64,
    pub p_start: f64,
    pub p_end: f64,
    pub phi: f64,
    pub class_id: Option<u32>,
}

impl Proposal {
    pub fn new(start: usize, end: usize, p_start: f64, p_end: f64, phi: f64) -> Self {
        Proposal {
            start,
            end,
            mid: mid_index(start, end),
            score: bayesian_score(p_start, p_end, phi),
            p_start,
            p_end,
            phi,
            class_id: None,
        }
    }

    pub fn segment(&self) -> (f64, f64) {
        (self.start as f64, self.end as f64)
    }

    fn iou(&self, other: &Proposal) -> f64 {
        segment_iou(self.segment(), other.segment())
    }
}

/// Product of start probability, end probability and compatibility.
#[inline]
pub fn bayesian_score(p_start: f64, p_end: f64, phi: f64) -> f64 {
    p_start * p_end * phi
}

/// Descending score; ties go to the earlier start, then the earlier end.
pub fn rank_order(a: &Proposal, b: &Proposal) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.start.cmp(&b.start))
        .then(a.end.cmp(&b.end))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmsKind {
    Greedy,
    Soft,
}

impl std::str::FromStr for NmsKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(NmsKind::Greedy),
            "soft" => Ok(NmsKind::Soft),
            other => Err(format!(
                "unknown NMS kind {other:?} (expected greedy or soft)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmsConfig {
    pub kind: NmsKind,
    pub iou_threshold: f64,
    pub soft_sigma: f64,
    pub soft_score_floor: f64,
}

impl Default for NmsConfig {
    fn default() -> Self {
        NmsConfig {
            kind: NmsKind::Soft,
            iou_threshold: 0.7,
            soft_sigma: 0.5,
            soft_score_floor: 0.001,
        }
    }
}

impl NmsConfig {
    pub fn apply(&self, proposals: Vec<Proposal>) -> Vec<Proposal> {
        match self.kind {
            NmsKind::Greedy => greedy_nms(proposals, self.iou_threshold),
            NmsKind::Soft => soft_nms(proposals, self.soft_sigma, self.soft_score_floor),
        }
    }
}

/// Keeps the best remaining proposal and drops everything overlapping it by more than `iou_threshold`.
pub fn greedy_nms(mut proposals: Vec<Proposal>, iou_threshold: f64) -> Vec<Proposal> {
    proposals.sort_by(rank_order);
    let mut kept: Vec<Proposal> = Vec::new();
    let mut alive = vec![true; proposals.len()];
    for i in 0..proposals.len() {
        if !alive[i] {
            continue;
        }
        let best = proposals[i];
        for (j, flag) in alive.iter_mut().enumerate().skip(i + 1) {
            if *flag && best.iou(&proposals[j]) > iou_threshold {
                *flag = false;
            }
        }
        kept.push(best);
    }
    kept
}

/// Gaussian soft-NMS: each pick multiplies the scores of the remaining
/// proposals by `exp(-iou^2 / sigma)`; results below `score_floor` are dropped.
pub fn soft_nms(mut proposals: Vec<Proposal>, sigma: f64, score_floor: f64) -> Vec<Proposal> {
    let mut out = Vec::with_capacity(proposals.len());
    while !proposals.is_empty() {
        let best_idx = proposals
            .iter()
            .enumerate()
            .min_by(|a, b| rank_order(a.1, b.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        let best = proposals.swap_remove(best_idx);
        for p in &mut proposals {
            let iou = best.iou(p);
            if iou > 0.0 {
                p.score *= (-iou * iou / sigma).exp();
            }
        }
        out.push(best);
    }
    out.retain(|p| p.score >= score_floor);
    out.sort_by(rank_order);
    out
}
