//! Stage functions chaining the modules together, shared by the command-line
//! tool and the end-to-end tests.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::autodiff::{ParamSet, ParamTensor};
use crate::checkpoint::{config_digest, load_checkpoint, save_checkpoint, ConfigDigest};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, Detection, EvalReport, LabeledSegment, Segment, VideoEval};
use crate::labeling::{inflate_labels, AnnotationSet};
use crate::mdc::{
    train_detector, Detector, DetectorConfig, ProbabilityTriple, TrainReport, TrainingExample,
};
use crate::proposal::{
    duration_stats, generate_proposals, phi_samples_for_video, train_phi, PhiNetwork,
    PhiTrainReport, Proposal, VideoProposals, PHI_HIDDEN, PHI_INPUT,
};
use crate::synth::FeatureSequence;

const DURATION_RANGE_TENSOR: &str = "pairing.duration_range";

/// One video's features with its ground truth.
pub type LabeledVideo = (FeatureSequence, AnnotationSet);

/// Pairs feature sequences with annotations by video id, keeping feature order.
pub fn join_annotations(
    features: Vec<FeatureSequence>,
    annotations: Vec<AnnotationSet>,
) -> Result<Vec<LabeledVideo>> {
    let mut by_id: std::collections::HashMap<String, AnnotationSet> = annotations
        .into_iter()
        .map(|a| (a.video_id.clone(), a))
        .collect();
    features
        .into_iter()
        .map(|f| {
            let ann = by_id.remove(&f.video_id).ok_or_else(|| {
                Error::InvalidArgument(format!("no annotations for video {}", f.video_id))
            })?;
            if ann.video_length != f.len() {
                return Err(Error::InvalidArgument(format!(
                    "video {}: annotations say {} snippets, features have {}",
                    f.video_id,
                    ann.video_length,
                    f.len()
                )));
            }
            Ok((f, ann))
        })
        .collect()
}

pub fn detector_digest(config: &DetectorConfig) -> Result<ConfigDigest> {
    config_digest(config)
}

#[derive(Serialize)]
struct PhiIdentity<'a> {
    input: usize,
    hidden: [usize; 2],
    detector: &'a DetectorConfig,
}

/// The ranking network is only meaningful on top of the detector it was trained with.
pub fn phi_digest(detector: &DetectorConfig) -> Result<ConfigDigest> {
    config_digest(&PhiIdentity {
        input: PHI_INPUT,
        hidden: PHI_HIDDEN,
        detector,
    })
}

pub fn save_detector(path: &Path, detector: &Detector) -> Result<()> {
    save_checkpoint(
        path,
        &detector_digest(detector.config())?,
        detector.params(),
    )
}

pub fn load_detector(path: &Path, config: &DetectorConfig) -> Result<Detector> {
    let params = load_checkpoint(path, &detector_digest(config)?)?;
    let mut detector = Detector::new(config.clone(), 0)?;
    detector
        .params_mut()
        .load_values_from(&params)
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(detector)
}

/// Ranking network plus the duration gate estimated from its training annotations.
#[derive(Debug, Clone)]
pub struct PhiModel {
    pub network: PhiNetwork,
    pub d_min: f64,
    pub d_max: f64,
}

pub fn save_phi(path: &Path, model: &PhiModel, detector: &DetectorConfig) -> Result<()> {
    let mut params = model.network.params().clone();
    params.add(ParamTensor::new(
        DURATION_RANGE_TENSOR,
        vec![2],
        vec![model.d_min, model.d_max],
    )?);
    save_checkpoint(path, &phi_digest(detector)?, &params)
}

pub fn load_phi(path: &Path, detector: &DetectorConfig) -> Result<PhiModel> {
    let stored = load_checkpoint(path, &phi_digest(detector)?)?;
    let mut network_params = ParamSet::new();
    let mut range = None;
    for p in stored.iter() {
        if p.name == DURATION_RANGE_TENSOR {
            range = Some((p.values[0], p.values[1]));
        } else {
            network_params.add(p.clone());
        }
    }
    let (d_min, d_max) = range
        .ok_or_else(|| Error::format(path, format!("missing {DURATION_RANGE_TENSOR} tensor")))?;
    let network =
        PhiNetwork::from_params(network_params).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(PhiModel {
        network,
        d_min,
        d_max,
    })
}

/// Builds inflated targets and trains a freshly initialised detector.
pub fn train_detector_stage(
    cfg: &RunConfig,
    videos: &[LabeledVideo],
) -> Result<(Detector, TrainReport)> {
    let examples = videos
        .iter()
        .map(|(f, a)| {
            Ok(TrainingExample {
                features: f.features.clone(),
                labels: inflate_labels(a, cfg.labeling.inflation)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut detector = Detector::new(cfg.detector.clone(), cfg.detector_training.seed)?;
    let report = train_detector(
        &mut detector,
        &examples,
        &cfg.detector_training,
        cfg.labeling.window,
    )?;
    Ok((detector, report))
}

/// Probability sequences for every video, in input order.
pub fn detect_all(
    detector: &Detector,
    features: &[&FeatureSequence],
) -> Result<Vec<ProbabilityTriple>> {
    features
        .par_iter()
        .map(|f| detector.forward(&f.features))
        .collect()
}

/// Runs the trained detector over the training videos, collects labelled
/// candidate pairs and fits the ranking network on them.
pub fn train_phi_stage(
    cfg: &RunConfig,
    detector: &Detector,
    videos: &[LabeledVideo],
) -> Result<(PhiModel, PhiTrainReport)> {
    let annotations: Vec<AnnotationSet> = videos.iter().map(|(_, a)| a.clone()).collect();
    let (d_min, d_max) = duration_stats(&annotations)?;
    let pairing = cfg.proposals.pairing(d_min, d_max);
    let triples = detect_all(detector, &videos.iter().map(|(f, _)| f).collect::<Vec<_>>())?;
    let per_video: Vec<Result<Vec<_>>> = triples
        .par_iter()
        .zip(videos.par_iter())
        .enumerate()
        .map(|(i, (triple, (_, ann)))| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.phi_training.seed);
            rng.set_stream(i as u64 + 1);
            phi_samples_for_video(
                triple,
                ann,
                &pairing,
                cfg.phi_sampling.max_positive_per_video,
                &mut rng,
            )
        })
        .collect();
    let mut samples = Vec::new();
    for r in per_video {
        samples.extend(r?);
    }
    log::info!("phi training on {} candidate pairs", samples.len());
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "the detector produced no candidate pairs on the training videos".into(),
        ));
    }
    let mut network = PhiNetwork::new(cfg.phi_training.seed);
    let report = train_phi(&mut network, &samples, &cfg.phi_training)?;
    Ok((
        PhiModel {
            network,
            d_min,
            d_max,
        },
        report,
    ))
}

/// Proposals for every video, in input order.
pub fn propose_stage(
    cfg: &RunConfig,
    detector: &Detector,
    phi: &PhiModel,
    features: &[&FeatureSequence],
) -> Result<Vec<VideoProposals>> {
    let pairing = cfg.proposals.pairing(phi.d_min, phi.d_max);
    pairing.validate()?;
    features
        .par_iter()
        .map(|f| {
            let triple = detector.forward(&f.features)?;
            let props = generate_proposals(
                &triple,
                &phi.network,
                &pairing,
                &cfg.nms,
                cfg.proposals.top_k,
            )?;
            Ok((f.video_id.clone(), props))
        })
        .collect()
}

/// Labels each proposal with the class of its best-overlapping instance, as a
/// stand-in for an external action classifier.
pub fn assign_oracle_classes(proposals: &mut [VideoProposals], annotations: &[AnnotationSet]) {
    let by_id: std::collections::HashMap<&str, &AnnotationSet> = annotations
        .iter()
        .map(|a| (a.video_id.as_str(), a))
        .collect();
    for (video, props) in proposals.iter_mut() {
        let Some(ann) = by_id.get(video.as_str()) else {
            continue;
        };
        for p in props.iter_mut() {
            p.class_id = best_class(p, ann);
        }
    }
}

fn best_class(p: &Proposal, ann: &AnnotationSet) -> Option<u32> {
    let mut best = None;
    let mut best_iou = 0.0;
    for inst in &ann.instances {
        let iou = crate::eval::segment_iou(p.segment(), inst.segment());
        if iou > best_iou {
            best_iou = iou;
            best = Some(inst.class_id);
        }
    }
    best.or_else(|| ann.instances.first().map(|i| i.class_id))
}

/// Scores proposals against annotations; mAP is included when every proposal has a class.
pub fn evaluate_stage(
    cfg: &RunConfig,
    proposals: &[VideoProposals],
    annotations: &[AnnotationSet],
) -> Result<EvalReport> {
    let by_id: std::collections::HashMap<&str, &Vec<Proposal>> =
        proposals.iter().map(|(v, p)| (v.as_str(), p)).collect();
    let empty = Vec::new();
    let segs: Vec<(Vec<Segment>, Vec<Segment>)> = annotations
        .iter()
        .map(|a| {
            let props = by_id.get(a.video_id.as_str()).copied().unwrap_or(&empty);
            (
                props.iter().map(Proposal::segment).collect(),
                a.instances.iter().map(|i| i.segment()).collect(),
            )
        })
        .collect();
    let videos: Vec<VideoEval<'_>> = segs
        .iter()
        .map(|(p, g)| VideoEval {
            proposals: p,
            ground_truth: g,
        })
        .collect();

    let classified = proposals
        .iter()
        .flat_map(|(_, p)| p)
        .all(|p| p.class_id.is_some())
        && proposals.iter().any(|(_, p)| !p.is_empty());
    let (detections, gt): (Vec<Detection>, Vec<Vec<LabeledSegment>>) = if classified {
        let mut dets = Vec::new();
        for (vi, a) in annotations.iter().enumerate() {
            if let Some(props) = by_id.get(a.video_id.as_str()) {
                dets.extend(props.iter().map(|p| Detection {
                    video: vi,
                    segment: p.segment(),
                    score: p.score,
                    class_id: p.class_id.unwrap_or_default(),
                }));
            }
        }
        let gt = annotations
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
        (dets, gt)
    } else {
        (Vec::new(), Vec::new())
    };
    let settings = cfg.eval.settings()?;
    evaluate(
        &videos,
        classified.then_some((detections.as_slice(), gt.as_slice())),
        &settings,
    )
}
