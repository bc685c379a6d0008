//! Seeded sweeps comparing library routines with the reference
//! implementations in the parent module.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsanet::autodiff::{ComputeGraph, ParamSet, ParamTensor};
use tsanet::eval::iou_1d;
use tsanet::mdc::ProbabilityTriple;
use tsanet::proposal::{
    greedy_nms, pair_candidates, phi_features, CandidatePoints, PairingConfig, Proposal,
};

use super::{
    interval_iou, naive_conv1d, random_tensor, reference_greedy_nms, reference_pairs,
    reference_phi_features,
};

/// Runs `trials` random convolutions and counts outputs that differ from the
/// naive loop in any bit.
pub fn conv_mismatches(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let c_in = rng.random_range(1..=8);
        let c_out = rng.random_range(1..=8);
        let t_len = rng.random_range(1..=64);
        let kernel = [1, 3, 5][rng.random_range(0..3)];
        let dilation = rng.random_range(1..=7);
        let input = random_tensor(&mut rng, c_in, t_len, 3.0);
        let weight = random_tensor(&mut rng, 1, c_out * c_in * kernel, 1.0).into_values();
        let bias = random_tensor(&mut rng, 1, c_out, 1.0).into_values();

        let mut params = ParamSet::new();
        let w =
            params.add(ParamTensor::new("w", vec![c_out, c_in, kernel], weight.clone()).unwrap());
        let b = params.add(ParamTensor::new("b", vec![c_out], bias.clone()).unwrap());
        let mut g = ComputeGraph::new();
        let x = g.input(input.clone()).unwrap();
        let y = g.conv1d_dilated(x, w, b, dilation, &params).unwrap();

        let expected = naive_conv1d(&input, &weight, &bias, c_out, kernel, dilation);
        let same = g
            .value(y)
            .values()
            .iter()
            .zip(expected.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            bad += 1;
        }
    }
    bad
}

fn random_segment(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Half the draws land on a coarse grid so touching, nested and identical
    // arrangements come up often.
    let (a, b) = if rng.random_bool(0.5) {
        (
            f64::from(rng.random_range(0..12u8)),
            f64::from(rng.random_range(0..12u8)),
        )
    } else {
        (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0))
    };
    if a < b {
        (a, b)
    } else if b < a {
        (b, a)
    } else {
        (a, a + 1.0)
    }
}

/// Largest deviation from the case-analysis oracle over `n` random pairs.
pub fn iou_max_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = random_segment(&mut rng);
            let b = random_segment(&mut rng);
            (iou_1d(a, b).unwrap() - interval_iou(a, b)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn random_proposals(rng: &mut ChaCha8Rng, max_len: usize, t_len: usize) -> Vec<Proposal> {
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| {
            let s = rng.random_range(0..t_len - 1);
            let e = rng.random_range(s + 1..t_len);
            // a coarse score grid makes ties common
            let p = f64::from(rng.random_range(1..=8u8)) / 8.0;
            Proposal::new(s, e, p, 1.0, 1.0)
        })
        .collect()
}

/// Trials where greedy suppression keeps a different set than the recursive reference.
pub fn greedy_mismatches(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let props = random_proposals(&mut rng, 20, 40);
        let threshold = [0.3, 0.5, 0.7, 0.0, 1.0][rng.random_range(0..5)];
        let key = |v: &[Proposal]| {
            let mut k: Vec<_> = v
                .iter()
                .map(|p| (p.start, p.end, p.score.to_bits()))
                .collect();
            k.sort_unstable();
            k
        };
        let ours = key(&greedy_nms(props.clone(), threshold));
        let reference = key(&reference_greedy_nms(props, threshold));
        if ours != reference {
            bad += 1;
        }
    }
    bad
}

fn random_subset(rng: &mut ChaCha8Rng, t_len: usize, max: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..t_len).collect();
    all.shuffle(rng);
    let mut pick: Vec<usize> = all.into_iter().take(rng.random_range(0..=max)).collect();
    pick.sort_unstable();
    pick
}

/// Trials where pairing disagrees with checking every index pair directly.
pub fn pairing_mismatches(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let t_len = rng.random_range(2..=20);
        let points = CandidatePoints {
            starts: random_subset(&mut rng, t_len, 20),
            ends: random_subset(&mut rng, t_len, 20),
        };
        let mid: Vec<f64> = (0..t_len)
            .map(|_| f64::from(rng.random_range(0..=4u8)) / 4.0)
            .collect();
        let d_min = f64::from(rng.random_range(1..=4u8));
        let cfg = PairingConfig {
            d_min,
            d_max: d_min + f64::from(rng.random_range(0..=12u8)),
            mid_threshold: f64::from(rng.random_range(0..=4u8)) / 4.0,
            point_threshold: 0.5,
        };
        let mut ours = pair_candidates(&points, &mid, &cfg);
        ours.sort_unstable();
        let reference = reference_pairs(
            &points.starts,
            &points.ends,
            &mid,
            cfg.d_min,
            cfg.d_max,
            cfg.mid_threshold,
        );
        if ours != reference {
            bad += 1;
        }
    }
    bad
}

/// Largest deviation of the pair descriptor from direct interpolation.
pub fn phi_features_max_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let t_len = rng.random_range(2..=80);
        let seqs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..t_len).map(|_| rng.random::<f64>()).collect())
            .collect();
        let triple =
            ProbabilityTriple::new(seqs[0].clone(), seqs[1].clone(), seqs[2].clone()).unwrap();
        let s = rng.random_range(0..t_len - 1);
        let e = rng.random_range(s + 1..t_len);
        let ours = phi_features(s, e, &triple).unwrap();
        let reference = reference_phi_features(s, e, [&seqs[0], &seqs[1], &seqs[2]]);
        assert_eq!(ours.len(), reference.len());
        for (a, b) in ours.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Draws where raising one factor of the score lowered it.
pub fn monotonicity_violations(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let f: [f64; 3] = std::array::from_fn(|_| rng.random());
        let base = tsanet::proposal::bayesian_score(f[0], f[1], f[2]);
        for k in 0..3 {
            let mut g = f;
            g[k] = rng.random_range(f[k]..=1.0);
            if tsanet::proposal::bayesian_score(g[0], g[1], g[2]) < base {
                bad += 1;
            }
        }
    }
    bad
}

/// Greedy NMS runs whose survivors overlap above the threshold, or that drop
/// a proposal no survivor suppresses.
pub fn antichain_violations(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let props = random_proposals(&mut rng, 25, 60);
        let threshold = rng.random_range(0.0..1.0);
        let kept = greedy_nms(props.clone(), threshold);
        let overlapping = kept.iter().enumerate().any(|(i, a)| {
            kept[i + 1..]
                .iter()
                .any(|b| iou_1d(a.segment(), b.segment()).unwrap() > threshold)
        });
        let unexplained = props.iter().any(|p| {
            !kept.contains(p)
                && !kept.iter().any(|k| {
                    k.score >= p.score && iou_1d(k.segment(), p.segment()).unwrap() > threshold
                })
        });
        if overlapping || unexplained {
            bad += 1;
        }
    }
    bad
}
