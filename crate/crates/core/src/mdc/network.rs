use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConvLayer, DetectorConfig, MdcBlockConfig, CRITICAL_POINT_KINDS};
use crate::autodiff::{ComputeGraph, Gradients, NodeId, ParamId, ParamSet, Tensor2D};
use crate::error::{Error, Result};
use crate::labeling::LabelTriple;

/// Start / mid / end probability sequences of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTriple {
    pub start: Vec<f64>,
    pub mid: Vec<f64>,
    pub end: Vec<f64>,
}

impl ProbabilityTriple {
    pub fn new(start: Vec<f64>, mid: Vec<f64>, end: Vec<f64>) -> Result<Self> {
        if start.len() != mid.len() || start.len() != end.len() {
            return Err(Error::shape(
                "probability_triple",
                format!(
                    "sequence lengths differ: {}/{}/{}",
                    start.len(),
                    mid.len(),
                    end.len()
                ),
            ));
        }
        Ok(ProbabilityTriple { start, mid, end })
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    fn from_tensor(t: &Tensor2D) -> Self {
        ProbabilityTriple {
            start: t.row(0).to_vec(),
            mid: t.row(1).to_vec(),
            end: t.row(2).to_vec(),
        }
    }
}

/// Weight and bias of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub weight: ParamId,
    pub bias: ParamId,
}

/// The three parallel convolutions of one MDC block, in dilation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdcBlockParams {
    pub convs: [ConvParams; 3],
}

/// `relu(x + mean_j relu(conv_{d_j}(x)))`.
pub fn mdc_block_forward(
    graph: &mut ComputeGraph,
    input: NodeId,
    config: &MdcBlockConfig,
    block: &MdcBlockParams,
    params: &ParamSet,
) -> Result<NodeId> {
    let channels = graph.value(input).channels();
    if channels != config.channels {
        return Err(Error::shape(
            "mdc_block_forward",
            format!(
                "block expects {} channels, input has {channels}",
                config.channels
            ),
        ));
    }
    let mut branches = [input; 3];
    for (slot, (conv, &dilation)) in branches
        .iter_mut()
        .zip(block.convs.iter().zip(&config.dilations))
    {
        let y = graph.conv1d_dilated(input, conv.weight, conv.bias, dilation, params)?;
        *slot = graph.relu(y);
    }
    let fused = graph.average(&branches)?;
    let residual = graph.add(input, fused)?;
    Ok(graph.relu(residual))
}

fn add_conv(
    params: &mut ParamSet,
    name: &str,
    c_in: usize,
    c_out: usize,
    kernel: usize,
    rng: &mut ChaCha8Rng,
) -> ConvParams {
    let weight = params.add_glorot(
        format!("{name}.weight"),
        vec![c_out, c_in, kernel],
        c_in * kernel,
        c_out * kernel,
        rng,
    );
    let bias = params.add_zeros(format!("{name}.bias"), vec![c_out]);
    ConvParams { weight, bias }
}

/// Multi-branch stacked-MDC detector emitting start/mid/end probabilities.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    params: ParamSet,
    shared: Vec<(ConvParams, ConvLayer)>,
    branches: Vec<Vec<(MdcBlockParams, MdcBlockConfig)>>,
    head: Vec<(ConvParams, ConvLayer)>,
}

impl Detector {
    /// Builds a detector with seeded Glorot-uniform weights and zero biases.
    pub fn new(config: DetectorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();

        let mut c_in = config.input_dim;
        let mut shared = Vec::new();
        for (i, layer) in config.shared_layers().into_iter().enumerate() {
            let p = add_conv(
                &mut params,
                &format!("shared.{i}"),
                c_in,
                layer.channels,
                layer.kernel,
                &mut rng,
            );
            shared.push((p, layer));
            c_in = layer.channels;
        }
        // Branches read the shared stack output; with no shared layers that is the raw features.
        if c_in != config.channels {
            return Err(Error::Config(format!(
                "branch width {} must match the shared stack output width {c_in}",
                config.channels
            )));
        }

        let mut branches = Vec::new();
        for (b, branch) in config.branches().into_iter().enumerate() {
            let mut blocks = Vec::new();
            for depth in 0..branch.depth {
                let convs = std::array::from_fn(|j| {
                    add_conv(
                        &mut params,
                        &format!("branch.{b}.block.{depth}.conv.{j}"),
                        branch.block.channels,
                        branch.block.channels,
                        branch.block.kernel_size,
                        &mut rng,
                    )
                });
                blocks.push((MdcBlockParams { convs }, branch.block));
            }
            branches.push(blocks);
        }

        let mut head = Vec::new();
        for (i, layer) in config.head_layers().into_iter().enumerate() {
            let p = add_conv(
                &mut params,
                &format!("head.{i}"),
                c_in,
                layer.channels,
                layer.kernel,
                &mut rng,
            );
            head.push((p, layer));
            c_in = layer.channels;
        }

        Ok(Detector {
            config,
            params,
            shared,
            branches,
            head,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Records the forward pass and returns the `3 x T` sigmoid output node.
    pub fn build(&self, graph: &mut ComputeGraph, features: NodeId) -> Result<NodeId> {
        let dim = graph.value(features).channels();
        if dim != self.config.input_dim {
            return Err(Error::shape(
                "detector_forward",
                format!(
                    "detector expects {}-dimensional features, got {dim}",
                    self.config.input_dim
                ),
            ));
        }
        let params = &self.params;
        let mut x = features;
        for (conv, _) in &self.shared {
            let y = graph.conv1d_dilated(x, conv.weight, conv.bias, 1, params)?;
            x = graph.relu(y);
        }
        let mut outputs = Vec::with_capacity(self.branches.len());
        for blocks in &self.branches {
            let mut h = x;
            for (block, cfg) in blocks {
                h = mdc_block_forward(graph, h, cfg, block, params)?;
            }
            outputs.push(h);
        }
        let mut x = graph.average(&outputs)?;
        let last = self.head.len() - 1;
        for (i, (conv, _)) in self.head.iter().enumerate() {
            let y = graph.conv1d_dilated(x, conv.weight, conv.bias, 1, params)?;
            x = if i == last {
                graph.sigmoid(y)
            } else {
                graph.relu(y)
            };
        }
        debug_assert_eq!(graph.value(x).channels(), CRITICAL_POINT_KINDS);
        Ok(x)
    }

    pub fn forward(&self, features: &Tensor2D) -> Result<ProbabilityTriple> {
        let mut graph = ComputeGraph::new();
        let input = graph.input(features.clone())?;
        let out = self.build(&mut graph, input)?;
        Ok(ProbabilityTriple::from_tensor(graph.value(out)))
    }

    /// Records forward plus the summed start/mid/end cross-entropy; returns `(graph, loss node)`.
    pub fn loss_graph(
        &self,
        features: &Tensor2D,
        labels: &LabelTriple,
    ) -> Result<(ComputeGraph, NodeId)> {
        if labels.len() != features.time() {
            return Err(Error::shape(
                "detector_loss",
                format!("{} labels for {} time steps", labels.len(), features.time()),
            ));
        }
        let mut graph = ComputeGraph::new();
        let input = graph.input(features.clone())?;
        let probs = self.build(&mut graph, input)?;
        let loss = graph.binary_cross_entropy(probs, labels.to_tensor())?;
        Ok((graph, loss))
    }

    /// Loss and parameter gradients for one video, without mutating the detector.
    pub fn loss_and_gradients(
        &self,
        features: &Tensor2D,
        labels: &LabelTriple,
    ) -> Result<(f64, Gradients)> {
        let (mut graph, loss) = self.loss_graph(features, labels)?;
        let value = graph.value(loss).get(0, 0);
        let grads = graph.gradients(loss, &self.params)?;
        Ok((value, grads))
    }
}
