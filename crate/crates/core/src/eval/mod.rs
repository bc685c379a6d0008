//! Temporal IoU and proposal/detection metrics: AR@AN, AUC of the AR-AN
//! curve, recall against IoU, and mAP.

mod iou;
mod map;
mod recall;
mod report;

pub use iou::{iou_1d, IoUGrid, Segment};
pub use map::{average_precision, map_at_iou, Detection, LabeledSegment, MapResult};
pub use recall::{
    ar_an_curve, auc_ar_an, average_recall_at_an, curve_area, matched_count, recall_vs_iou,
    VideoEval,
};
pub use report::{evaluate, parse_curve_csv, Curve, EvalReport, EvalSettings};

pub(crate) use iou::segment_iou;
