use super::kernels;
use super::param::{Gradients, ParamId, ParamSet};
use super::tensor::Tensor2D;
use crate::error::{Error, Result};

/// Probabilities are clamped this far from 0 and 1 before taking logs.
pub const BCE_CLAMP: f64 = 1e-12;

/// Handle to a node recorded in a [`ComputeGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Conv1d {
        input: NodeId,
        weight: ParamId,
        bias: ParamId,
        kernel: usize,
        dilation: usize,
    },
    Linear {
        input: NodeId,
        weight: ParamId,
        bias: ParamId,
    },
    Relu(NodeId),
    Sigmoid(NodeId),
    Add(NodeId, NodeId),
    Average(Vec<NodeId>),
    Scale(NodeId, f64),
    Sum(NodeId),
    Bce {
        input: NodeId,
        target: Tensor2D,
    },
    SmoothL1Mean {
        input: NodeId,
        target: Tensor2D,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor2D,
    requires_grad: bool,
}

/// Tape of executed operations. Nodes are appended in execution order, so the
/// tape order is a topological order and backward walks it in reverse.
#[derive(Debug, Default)]
pub struct ComputeGraph {
    nodes: Vec<Node>,
    consumed: bool,
    trace: Vec<usize>,
}

fn check_finite(value: &Tensor2D, op: &str) -> Result<()> {
    if value.all_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(op.to_string()))
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic function computed from the pre-activation,
/// which stays non-zero long after the output itself rounds to 0 or 1.
#[inline]
fn sigmoid_derivative(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Smooth L1 with transition point 1.
#[inline]
pub fn smooth_l1(prediction: f64, target: f64) -> f64 {
    let d = prediction - target;
    if d.abs() < 1.0 {
        0.5 * d * d
    } else {
        d.abs() - 0.5
    }
}

/// Summed binary cross-entropy (negative log-likelihood) of `p` against binary targets `y`.
pub fn binary_cross_entropy(p: &[f64], y: &[f64]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::shape(
            "binary_cross_entropy",
            format!("{} probabilities vs {} targets", p.len(), y.len()),
        ));
    }
    Ok(p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            let pc = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln())
        })
        .sum())
}

impl ComputeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, value: Tensor2D, requires_grad: bool) -> NodeId {
        self.consumed = false;
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> &Tensor2D {
        &self.node(id).value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node indices in the order the most recent backward pass visited them.
    pub fn backward_trace(&self) -> &[usize] {
        &self.trace
    }

    /// Records a constant (non-differentiable) input.
    pub fn input(&mut self, value: Tensor2D) -> Result<NodeId> {
        check_finite(&value, "input")?;
        Ok(self.push(Op::Input, value, false))
    }

    /// Exposes a parameter as a `1 x n` node.
    pub fn param(&mut self, id: ParamId, params: &ParamSet) -> NodeId {
        let p = params.get(id);
        let value = Tensor2D::new(1, p.len(), p.values.clone()).expect("param is non-empty");
        self.push(Op::Param(id), value, true)
    }

    pub fn conv1d_dilated(
        &mut self,
        input: NodeId,
        weight: ParamId,
        bias: ParamId,
        dilation: usize,
        params: &ParamSet,
    ) -> Result<NodeId> {
        let w = params.get(weight);
        let b = params.get(bias);
        let x = self.value(input);
        let [c_out, c_in, kernel] = match *w.shape() {
            [a, b, c] => [a, b, c],
            _ => {
                return Err(Error::shape(
                    "conv1d_dilated",
                    format!("weight {} must be rank 3, got {:?}", w.name, w.shape()),
                ))
            }
        };
        if kernel % 2 == 0 {
            return Err(Error::shape(
                "conv1d_dilated",
                format!("kernel size {kernel} must be odd"),
            ));
        }
        if dilation == 0 {
            return Err(Error::InvalidArgument("dilation must be >= 1".into()));
        }
        if c_in != x.channels() {
            return Err(Error::shape(
                "conv1d_dilated",
                format!(
                    "weight {} expects {c_in} input channels, input has {}",
                    w.name,
                    x.channels()
                ),
            ));
        }
        if b.shape() != [c_out] {
            return Err(Error::shape(
                "conv1d_dilated",
                format!(
                    "bias {} has shape {:?}, expected [{c_out}]",
                    b.name,
                    b.shape()
                ),
            ));
        }
        let out = kernels::conv1d_forward(x, &w.values, &b.values, c_out, kernel, dilation);
        check_finite(&out, "conv1d_dilated")?;
        Ok(self.push(
            Op::Conv1d {
                input,
                weight,
                bias,
                kernel,
                dilation,
            },
            out,
            true,
        ))
    }

    /// Affine map applied to every column of an `n x batch` input.
    pub fn fully_connected(
        &mut self,
        input: NodeId,
        weight: ParamId,
        bias: ParamId,
        params: &ParamSet,
    ) -> Result<NodeId> {
        let w = params.get(weight);
        let b = params.get(bias);
        let x = self.value(input);
        let [m, n] = match *w.shape() {
            [m, n] => [m, n],
            _ => {
                return Err(Error::shape(
                    "fully_connected",
                    format!("weight {} must be rank 2, got {:?}", w.name, w.shape()),
                ))
            }
        };
        if n != x.channels() || b.shape() != [m] {
            return Err(Error::shape(
                "fully_connected",
                format!(
                    "weight {}{:?} / bias {:?} incompatible with input of {} features",
                    w.name,
                    w.shape(),
                    b.shape(),
                    x.channels()
                ),
            ));
        }
        let out = kernels::linear_forward(x, &w.values, &b.values, m);
        check_finite(&out, "fully_connected")?;
        Ok(self.push(
            Op::Linear {
                input,
                weight,
                bias,
            },
            out,
            true,
        ))
    }

    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let out = self.value(input).map(|v| v.max(0.0));
        let rg = self.node(input).requires_grad;
        self.push(Op::Relu(input), out, rg)
    }

    pub fn sigmoid(&mut self, input: NodeId) -> NodeId {
        let out = self.value(input).map(sigmoid_scalar);
        let rg = self.node(input).requires_grad;
        self.push(Op::Sigmoid(input), out, rg)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.same_shape(vb) {
            return Err(Error::shape(
                "add",
                format!("{:?} vs {:?}", va.shape(), vb.shape()),
            ));
        }
        let mut out = va.clone();
        out.values_mut()
            .iter_mut()
            .zip(vb.values())
            .for_each(|(o, v)| *o += v);
        check_finite(&out, "add")?;
        let rg = self.node(a).requires_grad || self.node(b).requires_grad;
        Ok(self.push(Op::Add(a, b), out, rg))
    }

    /// Elementwise arithmetic mean of equally shaped nodes.
    pub fn average(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        let Some(&first) = inputs.first() else {
            return Err(Error::InvalidArgument("average of an empty list".into()));
        };
        let shape = self.value(first).shape();
        if let Some(bad) = inputs.iter().find(|&&i| self.value(i).shape() != shape) {
            return Err(Error::shape(
                "average",
                format!("{:?} vs {:?}", self.value(*bad).shape(), shape),
            ));
        }
        let mut out = self.value(first).clone();
        for &i in &inputs[1..] {
            out.values_mut()
                .iter_mut()
                .zip(self.value(i).values())
                .for_each(|(o, v)| *o += v);
        }
        let n = inputs.len() as f64;
        out.values_mut().iter_mut().for_each(|v| *v /= n);
        let rg = inputs.iter().any(|&i| self.node(i).requires_grad);
        Ok(self.push(Op::Average(inputs.to_vec()), out, rg))
    }

    pub fn scale(&mut self, input: NodeId, factor: f64) -> Result<NodeId> {
        let out = self.value(input).map(|v| v * factor);
        check_finite(&out, "scale")?;
        let rg = self.node(input).requires_grad;
        Ok(self.push(Op::Scale(input, factor), out, rg))
    }

    /// Sum of all elements as a `1 x 1` node.
    pub fn sum(&mut self, input: NodeId) -> NodeId {
        let total = self.value(input).values().iter().sum();
        let rg = self.node(input).requires_grad;
        self.push(Op::Sum(input), Tensor2D::filled(1, 1, total), rg)
    }

    /// Summed binary cross-entropy over every element of `input` against binary `target`.
    pub fn binary_cross_entropy(&mut self, input: NodeId, target: Tensor2D) -> Result<NodeId> {
        let p = self.value(input);
        if !p.same_shape(&target) {
            return Err(Error::shape(
                "binary_cross_entropy",
                format!("prediction {:?} vs target {:?}", p.shape(), target.shape()),
            ));
        }
        let loss = binary_cross_entropy(p.values(), target.values())?;
        let out = Tensor2D::filled(1, 1, loss);
        check_finite(&out, "binary_cross_entropy")?;
        let rg = self.node(input).requires_grad;
        Ok(self.push(Op::Bce { input, target }, out, rg))
    }

    /// Mean smooth-L1 loss over every element of `input`.
    pub fn smooth_l1_mean(&mut self, input: NodeId, target: Tensor2D) -> Result<NodeId> {
        let p = self.value(input);
        if !p.same_shape(&target) {
            return Err(Error::shape(
                "smooth_l1",
                format!("prediction {:?} vs target {:?}", p.shape(), target.shape()),
            ));
        }
        let n = p.len() as f64;
        let loss = p
            .values()
            .iter()
            .zip(target.values())
            .map(|(&a, &b)| smooth_l1(a, b))
            .sum::<f64>()
            / n;
        let out = Tensor2D::filled(1, 1, loss);
        check_finite(&out, "smooth_l1")?;
        let rg = self.node(input).requires_grad;
        Ok(self.push(Op::SmoothL1Mean { input, target }, out, rg))
    }

    /// Runs the reverse pass from a scalar node and returns parameter gradients
    /// without touching `params`. Fails if called twice without a new forward op.
    pub fn gradients(&mut self, loss: NodeId, params: &ParamSet) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::BackwardConsumed);
        }
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::shape(
                "backward",
                format!("loss must be 1x1, got {:?}", self.value(loss).shape()),
            ));
        }
        self.consumed = true;
        self.trace.clear();

        let mut grads = Gradients::new(params.len());
        let mut node_grads: Vec<Option<Tensor2D>> = Vec::with_capacity(self.nodes.len());
        node_grads.resize_with(self.nodes.len(), || None);
        node_grads[loss.0] = Some(Tensor2D::filled(1, 1, 1.0));

        for idx in (0..=loss.0).rev() {
            self.trace.push(idx);
            let Some(g) = node_grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            self.backprop_node(node, &g, params, &mut grads, &mut node_grads);
        }
        Ok(grads)
    }

    /// Reverse pass that accumulates straight into the parameters' gradient fields.
    pub fn backward(&mut self, loss: NodeId, params: &mut ParamSet) -> Result<()> {
        let grads = self.gradients(loss, params)?;
        params.accumulate(&grads, 1.0);
        Ok(())
    }

    fn backprop_node(
        &self,
        node: &Node,
        g: &Tensor2D,
        params: &ParamSet,
        grads: &mut Gradients,
        node_grads: &mut [Option<Tensor2D>],
    ) {
        let wants = |id: NodeId| self.nodes[id.0].requires_grad;
        let send =
            |node_grads: &mut [Option<Tensor2D>], id: NodeId, delta: Tensor2D| match node_grads
                [id.0]
                .as_mut()
            {
                Some(acc) => acc
                    .values_mut()
                    .iter_mut()
                    .zip(delta.values())
                    .for_each(|(a, d)| *a += d),
                None => node_grads[id.0] = Some(delta),
            };

        match &node.op {
            Op::Input => {}
            Op::Param(id) => {
                let len = params.get(*id).len();
                grads
                    .slot(*id, len)
                    .iter_mut()
                    .zip(g.values())
                    .for_each(|(a, d)| *a += d);
            }
            Op::Conv1d {
                input,
                weight,
                bias,
                kernel,
                dilation,
            } => {
                let x = self.value(*input);
                let w = params.get(*weight);
                let mut gw = vec![0.0; w.len()];
                let mut gb = vec![0.0; params.get(*bias).len()];
                let mut gx = wants(*input).then(|| Tensor2D::zeros(x.channels(), x.time()));
                kernels::conv1d_backward(
                    x,
                    &w.values,
                    g,
                    *kernel,
                    *dilation,
                    gx.as_mut(),
                    &mut gw,
                    &mut gb,
                );
                add_into(grads.slot(*weight, gw.len()), &gw);
                add_into(grads.slot(*bias, gb.len()), &gb);
                if let Some(gx) = gx {
                    send(node_grads, *input, gx);
                }
            }
            Op::Linear {
                input,
                weight,
                bias,
            } => {
                let x = self.value(*input);
                let w = params.get(*weight);
                let mut gw = vec![0.0; w.len()];
                let mut gb = vec![0.0; params.get(*bias).len()];
                let mut gx = wants(*input).then(|| Tensor2D::zeros(x.channels(), x.time()));
                kernels::linear_backward(x, &w.values, g, gx.as_mut(), &mut gw, &mut gb);
                add_into(grads.slot(*weight, gw.len()), &gw);
                add_into(grads.slot(*bias, gb.len()), &gb);
                if let Some(gx) = gx {
                    send(node_grads, *input, gx);
                }
            }
            Op::Relu(input) => {
                let x = self.value(*input);
                let mut gx = g.clone();
                gx.values_mut()
                    .iter_mut()
                    .zip(x.values())
                    .for_each(|(d, &x)| {
                        if x <= 0.0 {
                            *d = 0.0
                        }
                    });
                send(node_grads, *input, gx);
            }
            Op::Sigmoid(input) => {
                let x = self.value(*input);
                let mut gx = g.clone();
                gx.values_mut()
                    .iter_mut()
                    .zip(x.values())
                    .for_each(|(d, &x)| *d *= sigmoid_derivative(x));
                send(node_grads, *input, gx);
            }
            Op::Add(a, b) => {
                if wants(*a) {
                    send(node_grads, *a, g.clone());
                }
                if wants(*b) {
                    send(node_grads, *b, g.clone());
                }
            }
            Op::Average(inputs) => {
                let share = g.map(|v| v / inputs.len() as f64);
                for &i in inputs {
                    if wants(i) {
                        send(node_grads, i, share.clone());
                    }
                }
            }
            Op::Scale(input, factor) => send(node_grads, *input, g.map(|v| v * factor)),
            Op::Sum(input) => {
                let (c, t) = self.value(*input).shape();
                send(node_grads, *input, Tensor2D::filled(c, t, g.get(0, 0)));
            }
            Op::Bce { input, target } => {
                let upstream = g.get(0, 0);
                let p = self.value(*input);
                let mut gp = p.clone();
                gp.values_mut()
                    .iter_mut()
                    .zip(target.values())
                    .for_each(|(v, &y)| {
                        let pc = v.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                        *v = upstream * (-y / pc + (1.0 - y) / (1.0 - pc));
                    });
                send(node_grads, *input, gp);
            }
            Op::SmoothL1Mean { input, target } => {
                let upstream = g.get(0, 0);
                let p = self.value(*input);
                let n = p.len() as f64;
                let mut gp = p.clone();
                gp.values_mut()
                    .iter_mut()
                    .zip(target.values())
                    .for_each(|(v, &t)| *v = upstream * (*v - t).clamp(-1.0, 1.0) / n);
                send(node_grads, *input, gp);
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
}
