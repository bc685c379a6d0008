//! One finite-difference case per differentiable operation, plus the two
//! complete networks. Each case is a function of a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tsanet::autodiff::{ComputeGraph, NodeId, ParamId, ParamSet, ParamTensor};
use tsanet::labeling::{inflate_labels, AnnotationSet, Instance};
use tsanet::mdc::{
    mdc_block_forward, ConvParams, Detector, DetectorConfig, MdcBlockConfig, MdcBlockParams,
};
use tsanet::proposal::PhiNetwork;

use super::{grad_check, grad_check_model, random_binary, random_tensor, GradCheck};

const T: usize = 12;

fn conv(
    params: &mut ParamSet,
    rng: &mut ChaCha8Rng,
    name: &str,
    c_in: usize,
    c_out: usize,
    k: usize,
) -> (ParamId, ParamId) {
    let w = params.add(
        ParamTensor::new(
            format!("{name}.w"),
            vec![c_out, c_in, k],
            random_tensor(rng, 1, c_out * c_in * k, 0.8).into_values(),
        )
        .unwrap(),
    );
    let b = params.add(
        ParamTensor::new(
            format!("{name}.b"),
            vec![c_out],
            random_tensor(rng, 1, c_out, 0.3).into_values(),
        )
        .unwrap(),
    );
    (w, b)
}

fn fc(
    params: &mut ParamSet,
    rng: &mut ChaCha8Rng,
    name: &str,
    n: usize,
    m: usize,
) -> (ParamId, ParamId) {
    let w = params.add(
        ParamTensor::new(
            format!("{name}.w"),
            vec![m, n],
            random_tensor(rng, 1, m * n, 0.8).into_values(),
        )
        .unwrap(),
    );
    let b = params.add(
        ParamTensor::new(
            format!("{name}.b"),
            vec![m],
            random_tensor(rng, 1, m, 0.3).into_values(),
        )
        .unwrap(),
    );
    (w, b)
}

/// Random input lifted through one convolution so later ops see a differentiable node.
struct Lifted {
    params: ParamSet,
    input: tsanet::autodiff::Tensor2D,
    lift: (ParamId, ParamId),
    rng: ChaCha8Rng,
}

fn lifted(seed: u64, channels: usize) -> Lifted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let input = random_tensor(&mut rng, 2, T, 1.0);
    let lift = conv(&mut params, &mut rng, "lift", 2, channels, 3);
    Lifted {
        params,
        input,
        lift,
        rng,
    }
}

fn lift_node(g: &mut ComputeGraph, l: &Lifted, p: &ParamSet) -> NodeId {
    let x = g.input(l.input.clone()).unwrap();
    g.conv1d_dilated(x, l.lift.0, l.lift.1, 1, p).unwrap()
}

fn squash_loss(g: &mut ComputeGraph, node: NodeId, target: &tsanet::autodiff::Tensor2D) -> NodeId {
    let s = g.sigmoid(node);
    g.binary_cross_entropy(s, target.clone()).unwrap()
}

pub fn conv1d(seed: u64) -> GradCheck {
    let mut l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    let layers: Vec<_> = (1..=3)
        .map(|d| (conv(&mut l.params, &mut rng, &format!("c{d}"), 3, 3, 3), d))
        .collect();
    let target = random_binary(&mut rng, 3, T);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let mut x = lift_node(&mut g, &l, p);
        for &((w, b), d) in &layers {
            x = g.conv1d_dilated(x, w, b, d, p).unwrap();
        }
        let loss = squash_loss(&mut g, x, &target);
        (g, loss)
    })
}

pub fn fully_connected(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let input = random_tensor(&mut rng, 5, 4, 1.0);
    let a = fc(&mut params, &mut rng, "fc1", 5, 6);
    let b = fc(&mut params, &mut rng, "fc2", 6, 2);
    let target = random_binary(&mut rng, 2, 4);
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = g.input(input.clone()).unwrap();
        let h = g.fully_connected(x, a.0, a.1, p).unwrap();
        let y = g.fully_connected(h, b.0, b.1, p).unwrap();
        let loss = squash_loss(&mut g, y, &target);
        (g, loss)
    })
}

pub fn relu(seed: u64) -> GradCheck {
    let l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    let target = random_tensor(&mut rng, 3, T, 1.0);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let r = g.relu(x);
        let loss = g.smooth_l1_mean(r, target.clone()).unwrap();
        (g, loss)
    })
}

pub fn sigmoid(seed: u64) -> GradCheck {
    let l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    let target = random_tensor(&mut rng, 3, T, 1.0);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let s = g.sigmoid(x);
        let loss = g.smooth_l1_mean(s, target.clone()).unwrap();
        (g, loss)
    })
}

pub fn add(seed: u64) -> GradCheck {
    let mut l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    let other = conv(&mut l.params, &mut rng, "other", 3, 3, 3);
    let target = random_binary(&mut rng, 3, T);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let y = g.conv1d_dilated(x, other.0, other.1, 2, p).unwrap();
        let s = g.add(x, y).unwrap();
        let loss = squash_loss(&mut g, s, &target);
        (g, loss)
    })
}

pub fn average(seed: u64) -> GradCheck {
    let mut l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    let convs: Vec<_> = (0..3)
        .map(|i| conv(&mut l.params, &mut rng, &format!("b{i}"), 3, 3, 3))
        .collect();
    let target = random_binary(&mut rng, 3, T);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let branches: Vec<NodeId> = convs
            .iter()
            .enumerate()
            .map(|(i, c)| g.conv1d_dilated(x, c.0, c.1, i + 1, p).unwrap())
            .collect();
        let m = g.average(&branches).unwrap();
        let loss = squash_loss(&mut g, m, &target);
        (g, loss)
    })
}

pub fn scale_and_sum(seed: u64) -> GradCheck {
    let l = lifted(seed, 2);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let s = g.sigmoid(x);
        let scaled = g.scale(s, -0.7).unwrap();
        let loss = g.sum(scaled);
        (g, loss)
    })
}

pub fn param_node(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let id = params.add(
        ParamTensor::new(
            "v",
            vec![7],
            random_tensor(&mut rng, 1, 7, 2.0).into_values(),
        )
        .unwrap(),
    );
    let target = random_binary(&mut rng, 1, 7);
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let v = g.param(id, p);
        let loss = squash_loss(&mut g, v, &target);
        (g, loss)
    })
}

pub fn binary_cross_entropy(seed: u64) -> GradCheck {
    let l = lifted(seed, 4);
    let mut rng = l.rng.clone();
    let target = random_binary(&mut rng, 4, T);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let loss = squash_loss(&mut g, x, &target);
        (g, loss)
    })
}

pub fn smooth_l1(seed: u64) -> GradCheck {
    let l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    // wide targets put residuals on both sides of the quadratic/linear switch
    let target = random_tensor(&mut rng, 3, T, 3.0);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let loss = g.smooth_l1_mean(x, target.clone()).unwrap();
        (g, loss)
    })
}

pub fn mdc_block(seed: u64) -> GradCheck {
    let mut l = lifted(seed, 3);
    let mut rng = l.rng.clone();
    let cfg = MdcBlockConfig {
        dilations: [1, 2, 3],
        kernel_size: 3,
        channels: 3,
    };
    let convs = std::array::from_fn(|j| {
        let (weight, bias) = conv(&mut l.params, &mut rng, &format!("mdc{j}"), 3, 3, 3);
        ConvParams { weight, bias }
    });
    let block = MdcBlockParams { convs };
    let target = random_binary(&mut rng, 3, T);
    let mut params = l.params.clone();
    grad_check(&mut params, |p| {
        let mut g = ComputeGraph::new();
        let x = lift_node(&mut g, &l, p);
        let y = mdc_block_forward(&mut g, x, &cfg, &block, p).unwrap();
        let loss = squash_loss(&mut g, y, &target);
        (g, loss)
    })
}

pub fn small_detector_config() -> DetectorConfig {
    DetectorConfig {
        input_dim: 3,
        channels: 4,
        ..DetectorConfig::default()
    }
}

/// Moves every parameter to a random point near its initial value so no
/// pre-activation sits exactly on a ReLU kink.
fn jitter(params: &mut ParamSet, rng: &mut ChaCha8Rng, scale: f64) {
    for p in params.iter_mut() {
        for v in &mut p.values {
            *v += rng.random_range(-scale..scale);
        }
    }
}

pub fn detector(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_len = 16;
    let mut det = Detector::new(small_detector_config(), seed).unwrap();
    jitter(det.params_mut(), &mut rng, 0.2);
    let features = random_tensor(&mut rng, 3, t_len, 1.5);
    let ann = AnnotationSet::new(
        "v",
        t_len,
        1,
        vec![Instance::new(2.0, 7.0, 0), Instance::new(9.0, 14.0, 1)],
    )
    .unwrap();
    let labels = inflate_labels(&ann, 0.1).unwrap();
    grad_check_model(&mut det, Detector::params_mut, |d| {
        d.loss_graph(&features, &labels).unwrap()
    })
}

pub fn phi_network(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = PhiNetwork::new(seed);
    jitter(net.params_mut(), &mut rng, 0.05);
    let batch = 2;
    let input = random_tensor(&mut rng, 96, batch, 1.0);
    let target = random_tensor(&mut rng, 1, batch, 1.0).map(f64::abs);
    grad_check_model(&mut net, PhiNetwork::params_mut, |n| {
        let mut g = ComputeGraph::new();
        let x = g.input(input.clone()).unwrap();
        let y = n.build(&mut g, x).unwrap();
        let loss = g.smooth_l1_mean(y, target.clone()).unwrap();
        (g, loss)
    })
}

pub type Case = (&'static str, fn(u64) -> GradCheck);

pub const CASES: &[Case] = &[
    ("conv1d_dilated", conv1d),
    ("fully_connected", fully_connected),
    ("relu", relu),
    ("sigmoid", sigmoid),
    ("add", add),
    ("average", average),
    ("scale_and_sum", scale_and_sum),
    ("param_node", param_node),
    ("binary_cross_entropy", binary_cross_entropy),
    ("smooth_l1_mean", smooth_l1),
    ("mdc_block", mdc_block),
    ("detector", detector),
    ("phi_network", phi_network),
];

pub const SEEDS: std::ops::Range<u64> = 0..10;

/// Worst relative error of each case over all seeds, with the number of
/// coordinates checked. Case and seed pairs run in parallel.
pub fn run_all() -> Vec<(&'static str, f64, usize)> {
    let jobs: Vec<(usize, u64)> = (0..CASES.len())
        .flat_map(|c| SEEDS.map(move |s| (c, s)))
        .collect();
    let results: Vec<(usize, GradCheck)> = jobs
        .into_par_iter()
        .map(|(c, s)| (c, (CASES[c].1)(s)))
        .collect();
    CASES
        .iter()
        .enumerate()
        .map(|(c, &(name, _))| {
            let (worst, checked) = results
                .iter()
                .filter(|r| r.0 == c)
                .fold((0.0f64, 0), |(w, n), r| {
                    (w.max(r.1.max_rel_error), n + r.1.checked)
                });
            (name, worst, checked)
        })
        .collect()
}
