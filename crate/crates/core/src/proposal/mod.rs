//! From probability sequences to ranked proposals: candidate selection,
//! gated pairing, compatibility scoring and redundancy removal.

mod candidates;
mod file;
mod nms;
mod phi;

pub use candidates::{
    duration_stats, mid_index, pair_candidates, select_candidates, CandidatePoints, PairingConfig,
};
pub use file::{
    format_proposals, parse_proposals, read_proposals, write_proposals, VideoProposals,
};
pub use nms::{bayesian_score, greedy_nms, rank_order, soft_nms, NmsConfig, NmsKind, Proposal};
pub use phi::{
    interpolate, phi_features, phi_target, sample_positions, train_phi, PhiNetwork, PhiSample,
    PhiTrainReport, PHI_HIDDEN, PHI_INPUT, PHI_SAMPLES, SEGMENT_EXTENSION,
};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::labeling::AnnotationSet;
use crate::mdc::ProbabilityTriple;

/// Candidate boundaries from the start and end sequences, paired under the gates.
pub fn candidate_pairs(triple: &ProbabilityTriple, cfg: &PairingConfig) -> Vec<(usize, usize)> {
    let points = CandidatePoints {
        starts: select_candidates(&triple.start, cfg.point_threshold),
        ends: select_candidates(&triple.end, cfg.point_threshold),
    };
    pair_candidates(&points, &triple.mid, cfg)
}

/// Scores pairs with `p_start * p_end * phi`.
pub fn score_pairs(
    pairs: &[(usize, usize)],
    triple: &ProbabilityTriple,
    phi: &PhiNetwork,
) -> Result<Vec<Proposal>> {
    let features = pairs
        .iter()
        .map(|&(s, e)| phi_features(s, e, triple))
        .collect::<Result<Vec<_>>>()?;
    let compat = phi.forward_batch(&features)?;
    Ok(pairs
        .iter()
        .zip(compat)
        .map(|(&(s, e), c)| Proposal::new(s, e, triple.start[s], triple.end[e], c))
        .collect())
}

/// Full per-video proposal stage; returns at most `top_k` proposals, best first.
pub fn generate_proposals(
    triple: &ProbabilityTriple,
    phi: &PhiNetwork,
    pairing: &PairingConfig,
    nms: &NmsConfig,
    top_k: usize,
) -> Result<Vec<Proposal>> {
    let pairs = candidate_pairs(triple, pairing);
    let scored = score_pairs(&pairs, triple, phi)?;
    let mut kept = nms.apply(scored);
    kept.truncate(top_k);
    Ok(kept)
}

/// Training pairs for the compatibility network from one video.
///
/// Every overlapping pair is kept (randomly thinned to `max_positive` when
/// there are more), and zero-IoU pairs are subsampled to match that count.
pub fn phi_samples_for_video(
    triple: &ProbabilityTriple,
    annotations: &AnnotationSet,
    pairing: &PairingConfig,
    max_positive: usize,
    rng: &mut impl Rng,
) -> Result<Vec<PhiSample>> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (s, e) in candidate_pairs(triple, pairing) {
        let target = phi_target(s as f64, e as f64, annotations);
        if target > 0.0 {
            positives.push((s, e, target));
        } else {
            negatives.push((s, e, target));
        }
    }
    if positives.len() > max_positive {
        positives.shuffle(rng);
        positives.truncate(max_positive);
    }
    negatives.shuffle(rng);
    negatives.truncate(positives.len());
    positives
        .into_iter()
        .chain(negatives)
        .map(|(s, e, target)| {
            Ok(PhiSample {
                features: phi_features(s, e, triple)?,
                target,
            })
        })
        .collect()
}
