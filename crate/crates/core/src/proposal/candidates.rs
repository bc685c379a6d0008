use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::AnnotationSet;

/// Candidate start and end indices, each strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidatePoints {
    pub starts: Vec<usize>,
    pub ends: Vec<usize>,
}

/// Gates applied when pairing candidate boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingConfig {
    pub d_min: f64,
    pub d_max: f64,
    /// Minimum mid-point probability for a pair to survive.
    pub mid_threshold: f64,
    /// Probability above which a point is a candidate regardless of its neighbours.
    pub point_threshold: f64,
}

impl PairingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0 && self.d_min <= self.d_max) {
            return Err(Error::Config(format!(
                "pairing needs 0 < d_min <= d_max, got [{}, {}]",
                self.d_min, self.d_max
            )));
        }
        if !(0.0..=1.0).contains(&self.mid_threshold) {
            return Err(Error::Config(format!(
                "mid_threshold must lie in [0, 1], got {}",
                self.mid_threshold
            )));
        }
        Ok(())
    }
}

/// Indices above `threshold` plus strict interior local maxima, sorted and deduplicated.
pub fn select_candidates(probs: &[f64], threshold: f64) -> Vec<usize> {
    (0..probs.len())
        .filter(|&t| {
            probs[t] > threshold
                || (t > 0
                    && t + 1 < probs.len()
                    && probs[t] > probs[t - 1]
                    && probs[t] > probs[t + 1])
        })
        .collect()
}

/// Index of the midpoint of `[start, end]`, rounded half up.
#[inline]
pub fn mid_index(start: usize, end: usize) -> usize {
    (start + end).div_ceil(2)
}

/// Every `(s, e)` with `s < e`, duration inside `[d_min, d_max]` and a confident mid-point.
pub fn pair_candidates(
    points: &CandidatePoints,
    mid_probs: &[f64],
    cfg: &PairingConfig,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for &s in &points.starts {
        for &e in &points.ends {
            if e <= s {
                continue;
            }
            let d = (e - s) as f64;
            if d < cfg.d_min || d > cfg.d_max {
                continue;
            }
            match mid_probs.get(mid_index(s, e)) {
                Some(&p) if p >= cfg.mid_threshold => pairs.push((s, e)),
                _ => {}
            }
        }
    }
    pairs
}

/// Shortest and longest annotated duration over a training set.
pub fn duration_stats(annotations: &[AnnotationSet]) -> Result<(f64, f64)> {
    let mut it = annotations
        .iter()
        .flat_map(|a| &a.instances)
        .map(|i| i.duration());
    let first = it.next().ok_or_else(|| {
        Error::InvalidArgument("no annotated instances to estimate durations".into())
    })?;
    Ok(it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d))))
}
