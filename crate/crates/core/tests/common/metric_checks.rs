//! The hand-computed metric fixture; see `fixtures/metrics/README.md`.

use tsanet::eval::{map_at_iou, Detection, LabeledSegment};
use tsanet::labeling::read_annotations;
use tsanet::pipeline::evaluate_stage;
use tsanet::proposal::read_proposals;
use tsanet::RunConfig;

use super::fixture;

/// `(quantity, computed, expected)` for every hand-derived number.
pub fn fixture_comparisons() -> Vec<(String, f64, f64)> {
    let annotations = read_annotations(&fixture("metrics/ground_truth.ann")).unwrap();
    let proposals = read_proposals(&fixture("metrics/proposals.tsv")).unwrap();
    let report = evaluate_stage(&RunConfig::default(), &proposals, &annotations).unwrap();

    let mut out = vec![("AR@1".to_string(), report.ar_an_curve[1].1, 24.0 / 55.0)];
    for an in [2, 3, 10, 100] {
        out.push((format!("AR@{an}"), report.ar_an_curve[an].1, 41.0 / 55.0));
    }
    for an in [10, 20, 50, 100, 200] {
        out.push((
            format!("reported AR@{an}"),
            report.ar_at(an).unwrap(),
            41.0 / 55.0,
        ));
    }
    out.push(("AUC".into(), report.auc, 4062.5 / 5500.0));
    for (t, m) in report.map.clone().unwrap() {
        out.push((format!("mAP@{t:.1}"), m, 79.0 / 90.0));
    }

    let detections: Vec<Detection> = annotations
        .iter()
        .enumerate()
        .flat_map(|(vi, a)| {
            let props = &proposals
                .iter()
                .find(|(id, _)| *id == a.video_id)
                .unwrap()
                .1;
            props.iter().map(move |p| Detection {
                video: vi,
                segment: p.segment(),
                score: p.score,
                class_id: p.class_id.unwrap(),
            })
        })
        .collect();
    let gt: Vec<Vec<LabeledSegment>> = annotations
        .iter()
        .map(|a| {
            a.instances
                .iter()
                .map(|i| LabeledSegment {
                    segment: i.segment(),
                    class_id: i.class_id,
                })
                .collect()
        })
        .collect();
    let at_08 = map_at_iou(&detections, &gt, 0.8);
    out.push(("AP class 0 @0.8".into(), at_08.per_class[&0], 34.0 / 45.0));
    out.push(("AP class 1 @0.8".into(), at_08.per_class[&1], 0.0));
    out.push(("mAP@0.8".into(), at_08.mean, 17.0 / 45.0));
    out.push((
        "mAP@0.85".into(),
        map_at_iou(&detections, &gt, 0.85).mean,
        0.25,
    ));
    out
}
