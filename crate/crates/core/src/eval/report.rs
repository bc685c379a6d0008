use std::fmt::Write as _;
use std::path::Path;

use super::iou::IoUGrid;
use super::map::{map_at_iou, Detection, LabeledSegment};
use super::recall::{ar_an_curve, average_recall_at_an, curve_area, recall_vs_iou, VideoEval};
use crate::error::{Error, Result};

/// Which numbers to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub grid: IoUGrid,
    pub an_points: Vec<usize>,
    pub auc_an_max: usize,
    /// AN used for the recall-vs-IoU curve.
    pub recall_an: usize,
    pub recall_iou_points: Vec<f64>,
    pub map_thresholds: Vec<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            grid: IoUGrid::thumos(),
            an_points: vec![10, 20, 50, 100, 200],
            auc_an_max: 100,
            recall_an: 100,
            recall_iou_points: (0..=20).map(|i| f64::from(i * 5) / 100.0).collect(),
            map_thresholds: vec![0.3, 0.4, 0.5, 0.6, 0.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub video_count: usize,
    pub instance_count: usize,
    pub ar_at_an: Vec<(usize, f64)>,
    pub auc: f64,
    pub ar_an_curve: Vec<(usize, f64)>,
    pub recall_vs_iou: Vec<(f64, f64)>,
    /// `(threshold, mAP)` when detections carry class labels.
    pub map: Option<Vec<(f64, f64)>>,
}

pub fn evaluate(
    videos: &[VideoEval<'_>],
    classified: Option<(&[Detection], &[Vec<LabeledSegment>])>,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    if settings.auc_an_max == 0 {
        return Err(Error::InvalidArgument("auc_an_max must be >= 1".into()));
    }
    let curve = ar_an_curve(videos, settings.auc_an_max, &settings.grid);
    let ar_at_an = settings
        .an_points
        .iter()
        .map(|&an| match curve.get(an) {
            Some(&(_, ar)) => (an, ar),
            None => (an, average_recall_at_an(videos, an, &settings.grid)),
        })
        .collect();
    let map = classified.map(|(dets, gt)| {
        settings
            .map_thresholds
            .iter()
            .map(|&t| (t, map_at_iou(dets, gt, t).mean))
            .collect()
    });
    Ok(EvalReport {
        video_count: videos.len(),
        instance_count: videos.iter().map(|v| v.ground_truth.len()).sum(),
        ar_at_an,
        auc: curve_area(&curve),
        recall_vs_iou: recall_vs_iou(videos, settings.recall_an, &settings.recall_iou_points),
        ar_an_curve: curve,
        map,
    })
}

impl EvalReport {
    pub fn ar_at(&self, an: usize) -> Option<f64> {
        self.ar_at_an
            .iter()
            .find(|(a, _)| *a == an)
            .map(|&(_, v)| v)
    }

    /// `key = value` summary block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "videos = {}", self.video_count).unwrap();
        writeln!(s, "instances = {}", self.instance_count).unwrap();
        for (an, ar) in &self.ar_at_an {
            writeln!(s, "ar@{an} = {ar}").unwrap();
        }
        writeln!(s, "auc = {}", self.auc).unwrap();
        writeln!(s, "auc_percent = {:.2}", self.auc * 100.0).unwrap();
        if let Some(map) = &self.map {
            for (t, m) in map {
                writeln!(s, "map@{t:.2} = {m}").unwrap();
            }
        }
        s
    }

    pub fn ar_an_csv(&self) -> String {
        let mut s = String::from("an,ar\n");
        for (an, ar) in &self.ar_an_curve {
            writeln!(s, "{an},{ar}").unwrap();
        }
        s
    }

    pub fn recall_iou_csv(&self) -> String {
        let mut s = String::from("iou,recall\n");
        for (iou, r) in &self.recall_vs_iou {
            writeln!(s, "{iou},{r}").unwrap();
        }
        s
    }
}

/// A two-column numeric CSV with its header names.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn parse_curve_csv(text: &str, origin: &Path) -> Result<Curve> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::format(origin, "empty CSV"))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.len() != 2 {
        return Err(Error::format(
            origin,
            format!("expected 2 columns, header is {header:?}"),
        ));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let parsed: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(origin, format!("row {}: not numeric: {line:?}", i + 2)))?;
        if parsed.len() != 2 {
            return Err(Error::format(
                origin,
                format!("row {}: expected 2 values", i + 2),
            ));
        }
        points.push((parsed[0], parsed[1]));
    }
    Ok(Curve {
        x_label: names[0].to_string(),
        y_label: names[1].to_string(),
        points,
    })
}
