//! Ground-truth annotations and their inflated binary start/mid/end targets.
//!
//! # Annotation file
//!
//! Plain text, one video per line, whitespace separated, `#` starts a comment:
//!
//! ```text
//! # video_id  T  stride  [start end class_id]...
//! video_0007  256  8  12 40 2  101.5 180 0
//! ```
//!
//! `T` is the snippet count and `stride` the frame interval used when the
//! features were extracted. Instance times are snippet indices and may be
//! fractional; they are rounded (half up) only when labels are built.

use std::fmt::Write as _;
use std::path::Path;

use crate::autodiff::Tensor2D;
use crate::error::{Error, Result};

/// Default half-width of an inflated region, as a fraction of instance length.
pub const DEFAULT_INFLATION: f64 = 0.1;

const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub start: f64,
    pub end: f64,
    pub class_id: u32,
}

impl Instance {
    pub fn new(start: f64, end: f64, class_id: u32) -> Self {
        Instance {
            start,
            end,
            class_id,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn segment(&self) -> (f64, f64) {
        (self.start, self.end)
    }
}

/// All annotated instances of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub video_id: String,
    pub video_length: usize,
    pub stride: u32,
    pub instances: Vec<Instance>,
}

impl AnnotationSet {
    pub fn new(
        video_id: impl Into<String>,
        video_length: usize,
        stride: u32,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        let set = AnnotationSet {
            video_id: video_id.into(),
            video_length,
            stride,
            instances,
        };
        set.validate()?;
        Ok(set)
    }

    /// Checks `0 <= start < end < T` for every instance.
    pub fn validate(&self) -> Result<()> {
        if self.video_length == 0 {
            return Err(Error::InvalidArgument(format!(
                "video {} has zero length",
                self.video_id
            )));
        }
        for inst in &self.instances {
            let ok = inst.start.is_finite()
                && inst.end.is_finite()
                && inst.start >= 0.0
                && inst.start < inst.end
                && inst.end < self.video_length as f64;
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "video {}: instance [{}, {}] outside 0 <= start < end < {}",
                    self.video_id, inst.start, inst.end, self.video_length
                )));
            }
        }
        Ok(())
    }
}

/// Binary targets for the three critical-point kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTriple {
    pub start: Vec<u8>,
    pub mid: Vec<u8>,
    pub end: Vec<u8>,
    pub inflation: f64,
}

impl LabelTriple {
    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    /// `3 x T` target tensor with rows ordered start, mid, end.
    pub fn to_tensor(&self) -> Tensor2D {
        let rows: Vec<Vec<f64>> = [&self.start, &self.mid, &self.end]
            .iter()
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        Tensor2D::from_rows(&rows).expect("label rows share one length")
    }

    /// Labels restricted to `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> LabelTriple {
        let cut = |v: &Vec<u8>| v[start..start + len].to_vec();
        LabelTriple {
            start: cut(&self.start),
            mid: cut(&self.mid),
            end: cut(&self.end),
            inflation: self.inflation,
        }
    }
}

/// Midpoint of an instance as a real value.
pub fn midpoint(start: f64, end: f64) -> Result<f64> {
    if start >= end {
        return Err(Error::InvalidArgument(format!(
            "midpoint needs start < end, got ({start}, {end})"
        )));
    }
    Ok((start + end) / 2.0)
}

#[inline]
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Inclusive index range covered by the inflated region around `point`, clipped to `[0, len)`.
///
/// The point is rounded half-up first; the region edges are then rounded
/// outward so the annotated index itself is always positive.
pub fn inflated_region(point: f64, half_width: f64, len: usize) -> Option<(usize, usize)> {
    let center = round_half_up(point) as f64;
    let lo = (center - half_width + ROUNDING_SLACK).floor().max(0.0);
    let hi = (center + half_width - ROUNDING_SLACK)
        .ceil()
        .max(center)
        .min(len as f64 - 1.0);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Builds inflated binary targets; overlapping regions union to 1.
pub fn inflate_labels(annotations: &AnnotationSet, delta: f64) -> Result<LabelTriple> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "inflation must be a finite value >= 0, got {delta}"
        )));
    }
    annotations.validate()?;
    let len = annotations.video_length;
    let mut labels = LabelTriple {
        start: vec![0; len],
        mid: vec![0; len],
        end: vec![0; len],
        inflation: delta,
    };
    for inst in &annotations.instances {
        let half = delta * inst.duration();
        let mid = midpoint(inst.start, inst.end)?;
        for (seq, point) in [
            (&mut labels.start, inst.start),
            (&mut labels.mid, mid),
            (&mut labels.end, inst.end),
        ] {
            if let Some((lo, hi)) = inflated_region(point, half, len) {
                seq[lo..=hi].iter_mut().for_each(|v| *v = 1);
            }
        }
    }
    Ok(labels)
}

/// Parses an annotation file; see the module docs for the grammar.
pub fn parse_annotations(text: &str, origin: &Path) -> Result<Vec<AnnotationSet>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |detail: String| Error::format(origin, format!("line {}: {detail}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 || !(fields.len() - 3).is_multiple_of(3) {
            return Err(bad(format!(
                "expected `video_id T stride` followed by start/end/class triples, got {} fields",
                fields.len()
            )));
        }
        let video_length: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad video length {:?}", fields[1])))?;
        let stride: u32 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad stride {:?}", fields[2])))?;
        let mut instances = Vec::new();
        for chunk in fields[3..].chunks(3) {
            let start: f64 = chunk[0]
                .parse()
                .map_err(|_| bad(format!("bad start {:?}", chunk[0])))?;
            let end: f64 = chunk[1]
                .parse()
                .map_err(|_| bad(format!("bad end {:?}", chunk[1])))?;
            let class_id: u32 = chunk[2]
                .parse()
                .map_err(|_| bad(format!("bad class id {:?}", chunk[2])))?;
            instances.push(Instance::new(start, end, class_id));
        }
        let set = AnnotationSet::new(fields[0], video_length, stride, instances)
            .map_err(|e| bad(e.to_string()))?;
        out.push(set);
    }
    Ok(out)
}

pub fn format_annotations(sets: &[AnnotationSet]) -> String {
    let mut text = String::from("# video_id T stride [start end class_id]...\n");
    for set in sets {
        write!(text, "{} {} {}", set.video_id, set.video_length, set.stride).unwrap();
        for inst in &set.instances {
            write!(text, " {} {} {}", inst.start, inst.end, inst.class_id).unwrap();
        }
        text.push('\n');
    }
    text
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationSet>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_annotations(&text, path)
}

pub fn write_annotations(path: &Path, sets: &[AnnotationSet]) -> Result<()> {
    std::fs::write(path, format_annotations(sets))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
