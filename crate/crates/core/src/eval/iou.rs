use crate::error::{Error, Result};

/// A closed real interval `[start, end]` on the time axis.
pub type Segment = (f64, f64);

/// Intersection over union of two 1-D segments.
pub fn iou_1d(a: Segment, b: Segment) -> Result<f64> {
    for s in [a, b] {
        if s.0.is_nan() || s.1.is_nan() || s.0 >= s.1 {
            return Err(Error::InvalidArgument(format!(
                "segment [{}, {}] is degenerate",
                s.0, s.1
            )));
        }
    }
    Ok(segment_iou(a, b))
}

/// Unchecked IoU for segments already known to be non-degenerate.
#[inline]
pub(crate) fn segment_iou(a: Segment, b: Segment) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    if inter == 0.0 {
        return 0.0;
    }
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    inter / union
}

/// Strictly increasing IoU thresholds in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IoUGrid {
    thresholds: Vec<f64>,
}

impl IoUGrid {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::InvalidArgument("IoU grid is empty".into()));
        }
        if thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "IoU thresholds must lie in (0, 1]: {thresholds:?}"
            )));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "IoU thresholds must be strictly increasing: {thresholds:?}"
            )));
        }
        Ok(IoUGrid { thresholds })
    }

    /// `lo_pct, lo_pct + step_pct, ..., hi_pct` in percent; each value is formed
    /// as an exact quotient so 0.95 and 1.0 come out bit-exact.
    pub fn from_percent(lo_pct: u32, hi_pct: u32, step_pct: u32) -> Result<Self> {
        if step_pct == 0 {
            return Err(Error::InvalidArgument(
                "IoU grid step must be positive".into(),
            ));
        }
        Self::new(
            (lo_pct..=hi_pct)
                .step_by(step_pct as usize)
                .map(|p| f64::from(p) / 100.0)
                .collect(),
        )
    }

    /// 0.50, 0.55, ..., 1.00.
    pub fn thumos() -> Self {
        Self::from_percent(50, 100, 5).expect("static grid")
    }

    /// 0.50, 0.55, ..., 0.95.
    pub fn activitynet() -> Self {
        Self::from_percent(50, 95, 5).expect("static grid")
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }
}
