//! The compatibility network scoring how well a start/end pair delimits one instance.
//!
//! A pair is described by 32 evenly spaced reads of each probability sequence
//! over the segment widened to 1.4x its length about its centre, giving 96
//! inputs to `FC(96,96) -> ReLU -> FC(96,48) -> ReLU -> FC(48,1) -> sigmoid`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ComputeGraph, NodeId, Optimizer, ParamId, ParamSet, Tensor2D};
use crate::error::{Error, Result};
use crate::eval::segment_iou;
use crate::labeling::AnnotationSet;
use crate::mdc::{epoch_rng, ProbabilityTriple};
use crate::schedule::TrainSchedule;

pub const PHI_SAMPLES: usize = 32;
pub const PHI_INPUT: usize = 3 * PHI_SAMPLES;
pub const PHI_HIDDEN: [usize; 2] = [96, 48];
pub const SEGMENT_EXTENSION: f64 = 1.4;

/// Reads `seq` at a real position, interpolating linearly and clamping to the ends.
#[inline]
pub fn interpolate(seq: &[f64], x: f64) -> f64 {
    let last = seq.len() - 1;
    let x = x.clamp(0.0, last as f64);
    let i = x.floor() as usize;
    if i >= last {
        return seq[last];
    }
    let frac = x - i as f64;
    seq[i] * (1.0 - frac) + seq[i + 1] * frac
}

/// Sample positions over the widened segment, both ends included.
pub fn sample_positions(start: usize, end: usize) -> [f64; PHI_SAMPLES] {
    let center = (start + end) as f64 / 2.0;
    let len = SEGMENT_EXTENSION * (end - start) as f64;
    let lo = center - len / 2.0;
    let step = len / (PHI_SAMPLES - 1) as f64;
    std::array::from_fn(|i| lo + i as f64 * step)
}

/// 96-value descriptor of a segment: start, mid and end probabilities in that order.
pub fn phi_features(start: usize, end: usize, triple: &ProbabilityTriple) -> Result<Vec<f64>> {
    if start >= end {
        return Err(Error::InvalidArgument(format!(
            "phi features need start < end, got ({start}, {end})"
        )));
    }
    if triple.is_empty() {
        return Err(Error::InvalidArgument("empty probability sequences".into()));
    }
    let positions = sample_positions(start, end);
    let mut out = Vec::with_capacity(PHI_INPUT);
    for seq in [&triple.start, &triple.mid, &triple.end] {
        out.extend(positions.iter().map(|&x| interpolate(seq, x)));
    }
    Ok(out)
}

/// Best IoU of `[start, end]` against any annotated instance; 0 with no instances.
pub fn phi_target(start: f64, end: f64, annotations: &AnnotationSet) -> f64 {
    annotations
        .instances
        .iter()
        .map(|i| segment_iou((start, end), i.segment()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    weight: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone)]
pub struct PhiNetwork {
    params: ParamSet,
    layers: [Layer; 3],
}

impl PhiNetwork {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let dims = [PHI_INPUT, PHI_HIDDEN[0], PHI_HIDDEN[1], 1];
        let layers = std::array::from_fn(|i| {
            let (n, m) = (dims[i], dims[i + 1]);
            Layer {
                weight: params.add_glorot(
                    format!("fc{}.weight", i + 1),
                    vec![m, n],
                    n,
                    m,
                    &mut rng,
                ),
                bias: params.add_zeros(format!("fc{}.bias", i + 1), vec![m]),
            }
        });
        PhiNetwork { params, layers }
    }

    /// Wraps loaded parameters, checking the 96-96-48-1 layout.
    pub fn from_params(params: ParamSet) -> Result<Self> {
        let mut reference = PhiNetwork::new(0);
        reference.params.load_values_from(&params)?;
        Ok(reference)
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Records the network on a `96 x batch` input; returns the `1 x batch` output node.
    pub fn build(&self, graph: &mut ComputeGraph, input: NodeId) -> Result<NodeId> {
        let mut x = input;
        for (i, layer) in self.layers.iter().enumerate() {
            let y = graph.fully_connected(x, layer.weight, layer.bias, &self.params)?;
            x = if i == 2 {
                graph.sigmoid(y)
            } else {
                graph.relu(y)
            };
        }
        Ok(x)
    }

    /// Scores a batch of feature vectors.
    pub fn forward_batch(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        if features.is_empty() {
            return Ok(Vec::new());
        }
        let input = batch_tensor(features.iter().map(Vec::as_slice), features.len())?;
        let mut graph = ComputeGraph::new();
        let x = graph.input(input)?;
        let out = self.build(&mut graph, x)?;
        Ok(graph.value(out).values().to_vec())
    }

    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        if features.len() != PHI_INPUT {
            return Err(Error::shape(
                "phi_forward",
                format!("expected {PHI_INPUT} features, got {}", features.len()),
            ));
        }
        Ok(self.forward_batch(&[features.to_vec()])?[0])
    }
}

/// Packs feature vectors as the columns of a `96 x batch` tensor.
fn batch_tensor<'a>(rows: impl Iterator<Item = &'a [f64]>, batch: usize) -> Result<Tensor2D> {
    let mut t = Tensor2D::zeros(PHI_INPUT, batch);
    for (b, f) in rows.enumerate() {
        if f.len() != PHI_INPUT {
            return Err(Error::shape(
                "phi_forward",
                format!("expected {PHI_INPUT} features, got {}", f.len()),
            ));
        }
        for (k, &v) in f.iter().enumerate() {
            t.set(k, b, v);
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSample {
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiTrainReport {
    /// Sample-weighted mean smooth-L1 loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fits the network to IoU targets with mean smooth-L1 loss over minibatches.
pub fn train_phi(
    network: &mut PhiNetwork,
    samples: &[PhiSample],
    schedule: &TrainSchedule,
) -> Result<PhiTrainReport> {
    schedule.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "phi training needs at least one sample".into(),
        ));
    }
    if let Some(bad) = samples.iter().find(|s| !(0.0..=1.0).contains(&s.target)) {
        return Err(Error::InvalidArgument(format!(
            "phi targets must lie in [0, 1], got {}",
            bad.target
        )));
    }

    let mut optimizer = Optimizer::new(schedule.optimizer_kind(), &network.params);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(schedule.max_epochs);
    for epoch in 0..schedule.max_epochs {
        order.shuffle(&mut epoch_rng(schedule.seed, 2, epoch));
        let lr = schedule.learning_rate(epoch);
        let mut total = 0.0;
        for (batch_idx, batch) in order.chunks(schedule.batch_size).enumerate() {
            let input = batch_tensor(
                batch.iter().map(|&i| samples[i].features.as_slice()),
                batch.len(),
            )?;
            let target = Tensor2D::new(
                1,
                batch.len(),
                batch.iter().map(|&i| samples[i].target).collect(),
            )?;
            let mut graph = ComputeGraph::new();
            let x = graph.input(input)?;
            let out = network.build(&mut graph, x)?;
            let loss = graph.smooth_l1_mean(out, target).map_err(|e| match e {
                Error::NonFinite(op) => Error::NonFinite(format!(
                    "{op} (phi training, epoch {epoch}, batch {batch_idx})"
                )),
                other => other,
            })?;
            total += graph.value(loss).get(0, 0) * batch.len() as f64;
            graph.backward(loss, &mut network.params)?;
            optimizer.step(&mut network.params, lr);
        }
        let mean = total / samples.len() as f64;
        log::info!("phi epoch {epoch}: lr {lr} mean loss {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok(PhiTrainReport { epoch_losses })
}
