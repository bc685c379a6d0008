//! Helpers shared by the integration tests: a finite-difference gradient
//! checker and straightforward reference implementations used as oracles.

#![allow(dead_code)]

pub mod benchmark;
pub mod grad_cases;
pub mod label_checks;
pub mod metric_checks;
pub mod oracle_checks;

use std::path::PathBuf;

use rand::Rng;
use tsanet::autodiff::{ComputeGraph, NodeId, ParamSet, Tensor2D};
use tsanet::proposal::Proposal;

pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, per unit of loss magnitude.
/// Round-off in a loss of size |L| puts about |L| * 1e-16 / FD_STEP of noise
/// on every central difference, so gradients below `FD_FLOOR * max(1, |L|)`
/// are compared in absolute terms instead.
pub const FD_FLOOR: f64 = 1e-6;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn random_tensor(rng: &mut impl Rng, channels: usize, time: usize, scale: f64) -> Tensor2D {
    let values = (0..channels * time)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    Tensor2D::new(channels, time, values).unwrap()
}

pub fn random_binary(rng: &mut impl Rng, channels: usize, time: usize) -> Tensor2D {
    let values = (0..channels * time)
        .map(|_| f64::from(rng.random_bool(0.5) as u8))
        .collect();
    Tensor2D::new(channels, time, values).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Compares reverse-mode gradients of `build` against central differences
/// for every scalar of every parameter.
pub fn grad_check<F>(params: &mut ParamSet, build: F) -> GradCheck
where
    F: Fn(&ParamSet) -> (ComputeGraph, NodeId),
{
    grad_check_model(params, |p| p, build)
}

/// As [`grad_check`], for a model that owns its parameters; `params_of`
/// exposes them so each coordinate is perturbed in place.
pub fn grad_check_model<M, P, F>(model: &mut M, params_of: P, build: F) -> GradCheck
where
    P: Fn(&mut M) -> &mut ParamSet,
    F: Fn(&M) -> (ComputeGraph, NodeId),
{
    let (grads, floor) = {
        let (mut graph, loss) = build(model);
        let floor = FD_FLOOR * graph.value(loss).get(0, 0).abs().max(1.0);
        (graph.gradients(loss, params_of(model)).unwrap(), floor)
    };
    let eval = |m: &M| {
        let (g, l) = build(m);
        g.value(l).get(0, 0)
    };

    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let ids: Vec<_> = params_of(model).ids().collect();
    for id in ids {
        let len = params_of(model).get(id).len();
        let analytic = grads
            .get(id)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; len]);
        for (k, &a) in analytic.iter().enumerate() {
            let original = params_of(model).get(id).values[k];
            params_of(model).get_mut(id).values[k] = original + FD_STEP;
            let up = eval(model);
            params_of(model).get_mut(id).values[k] = original - FD_STEP;
            let down = eval(model);
            params_of(model).get_mut(id).values[k] = original;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    GradCheck {
        max_rel_error: worst,
        checked,
    }
}

/// Same-padded dilated convolution written as the textbook triple sum.
pub fn naive_conv1d(
    input: &Tensor2D,
    weight: &[f64],
    bias: &[f64],
    c_out: usize,
    kernel: usize,
    dilation: usize,
) -> Tensor2D {
    let (c_in, t_len) = input.shape();
    let half = (kernel - 1) / 2;
    let mut out = Tensor2D::zeros(c_out, t_len);
    for o in 0..c_out {
        for t in 0..t_len {
            let mut acc = bias[o];
            for i in 0..c_in {
                for k in 0..kernel {
                    let src = t as isize + (k as isize - half as isize) * dilation as isize;
                    if src >= 0 && (src as usize) < t_len {
                        acc += weight[(o * c_in + i) * kernel + k] * input.get(i, src as usize);
                    }
                }
            }
            out.set(o, t, acc);
        }
    }
    out
}

/// IoU by explicit case analysis on how two intervals are arranged.
pub fn interval_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (first, second) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    if second.0 >= first.1 {
        return 0.0;
    }
    if second.1 <= first.1 {
        // second nested inside first
        return (second.1 - second.0) / (first.1 - first.0);
    }
    (first.1 - second.0) / (second.1 - first.0)
}

/// Greedy NMS as a recursion: keep the best, drop its heavy overlaps, repeat.
pub fn reference_greedy_nms(mut props: Vec<Proposal>, threshold: f64) -> Vec<Proposal> {
    if props.is_empty() {
        return props;
    }
    let best_idx = (0..props.len())
        .max_by(|&i, &j| {
            let (a, b) = (&props[i], &props[j]);
            a.score
                .partial_cmp(&b.score)
                .unwrap()
                .then(b.start.cmp(&a.start))
                .then(b.end.cmp(&a.end))
        })
        .unwrap();
    let best = props.remove(best_idx);
    let rest: Vec<Proposal> = props
        .into_iter()
        .filter(|p| interval_iou(best.segment(), p.segment()) <= threshold)
        .collect();
    let mut out = vec![best];
    out.extend(reference_greedy_nms(rest, threshold));
    out
}

/// Every index pair checked directly against the pairing rules.
pub fn reference_pairs(
    starts: &[usize],
    ends: &[usize],
    mid: &[f64],
    d_min: f64,
    d_max: f64,
    tau: f64,
) -> Vec<(usize, usize)> {
    let t_len = mid.len();
    let mut out = Vec::new();
    for s in 0..t_len {
        for e in 0..t_len {
            if !starts.contains(&s) || !ends.contains(&e) || s >= e {
                continue;
            }
            let d = (e - s) as f64;
            let m = ((s + e) as f64 / 2.0 + 0.5).floor() as usize;
            if d >= d_min && d <= d_max && m < t_len && mid[m] >= tau {
                out.push((s, e));
            }
        }
    }
    out
}

/// Reads a sequence at a fractional position by blending its two neighbours.
pub fn reference_read(seq: &[f64], x: f64) -> f64 {
    if x <= 0.0 {
        return seq[0];
    }
    let last = (seq.len() - 1) as f64;
    if x >= last {
        return seq[seq.len() - 1];
    }
    let lo = x.floor();
    let hi = x.ceil();
    if lo == hi {
        return seq[lo as usize];
    }
    seq[lo as usize] * (hi - x) + seq[hi as usize] * (x - lo)
}

/// 96 reads: 32 points from 0.2 lengths before the start to 0.2 after the end.
pub fn reference_phi_features(start: usize, end: usize, seqs: [&[f64]; 3]) -> Vec<f64> {
    let len = (end - start) as f64;
    let lo = start as f64 - 0.2 * len;
    let hi = end as f64 + 0.2 * len;
    let mut out = Vec::with_capacity(96);
    for seq in seqs {
        for i in 0..32 {
            let x = lo + (hi - lo) * i as f64 / 31.0;
            out.push(reference_read(seq, x));
        }
    }
    out
}
