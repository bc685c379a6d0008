//! Raw forward/backward loops for the dense layers.
//!
//! Every kernel works on contiguous rows so the innermost loop is an axpy or a
//! dot product over time. For a fixed output element the accumulation order is
//! bias first, then input channel major, kernel tap minor.

use super::tensor::Tensor2D;

/// Time range `[t0, t1)` over which `t + offset` stays inside `[0, len)`.
/// `None` when the shifted window misses the sequence entirely.
#[inline]
fn valid_range(len: usize, offset: isize) -> Option<(usize, usize)> {
    let t0 = if offset < 0 { (-offset) as usize } else { 0 };
    let t1 = if offset > 0 {
        len.saturating_sub(offset as usize)
    } else {
        len
    };
    (t0 < t1).then_some((t0, t1))
}

#[inline]
pub(crate) fn tap_offset(k: usize, kernel: usize, dilation: usize) -> isize {
    (k as isize - ((kernel - 1) / 2) as isize) * dilation as isize
}

pub(crate) fn conv1d_forward(
    input: &Tensor2D,
    weight: &[f64],
    bias: &[f64],
    c_out: usize,
    kernel: usize,
    dilation: usize,
) -> Tensor2D {
    let (c_in, time) = input.shape();
    let mut out = Tensor2D::zeros(c_out, time);
    for (co, &b) in bias.iter().enumerate().take(c_out) {
        let out_row = out.row_mut(co);
        out_row.fill(b);
        for ci in 0..c_in {
            let in_row = input.row(ci);
            let w_base = (co * c_in + ci) * kernel;
            for k in 0..kernel {
                let w = weight[w_base + k];
                let off = tap_offset(k, kernel, dilation);
                let Some((t0, t1)) = valid_range(time, off) else {
                    continue;
                };
                let src = &in_row[(t0 as isize + off) as usize..(t1 as isize + off) as usize];
                for (o, x) in out_row[t0..t1].iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        }
    }
    out
}

/// Accumulates input, weight and bias gradients of a same-padded dilated convolution.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward(
    input: &Tensor2D,
    weight: &[f64],
    grad_out: &Tensor2D,
    kernel: usize,
    dilation: usize,
    grad_input: Option<&mut Tensor2D>,
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
) {
    let (c_in, time) = input.shape();
    let c_out = grad_out.channels();
    for (co, gb) in grad_bias.iter_mut().enumerate().take(c_out) {
        let g_row = grad_out.row(co);
        *gb += g_row.iter().sum::<f64>();
        for ci in 0..c_in {
            let in_row = input.row(ci);
            let w_base = (co * c_in + ci) * kernel;
            for k in 0..kernel {
                let off = tap_offset(k, kernel, dilation);
                let Some((t0, t1)) = valid_range(time, off) else {
                    continue;
                };
                let src = &in_row[(t0 as isize + off) as usize..(t1 as isize + off) as usize];
                grad_weight[w_base + k] += g_row[t0..t1]
                    .iter()
                    .zip(src)
                    .map(|(g, x)| g * x)
                    .sum::<f64>();
            }
        }
    }
    if let Some(grad_input) = grad_input {
        for co in 0..c_out {
            let g_row = grad_out.row(co);
            for ci in 0..c_in {
                let w_base = (co * c_in + ci) * kernel;
                let gi_row = grad_input.row_mut(ci);
                for k in 0..kernel {
                    let w = weight[w_base + k];
                    let off = tap_offset(k, kernel, dilation);
                    let Some((t0, t1)) = valid_range(time, off) else {
                        continue;
                    };
                    let dst =
                        &mut gi_row[(t0 as isize + off) as usize..(t1 as isize + off) as usize];
                    for (d, g) in dst.iter_mut().zip(&g_row[t0..t1]) {
                        *d += w * g;
                    }
                }
            }
        }
    }
}

/// Column-wise affine map: `input` is `n x batch`, `weight` is `m x n`.
pub(crate) fn linear_forward(input: &Tensor2D, weight: &[f64], bias: &[f64], m: usize) -> Tensor2D {
    conv1d_forward(input, weight, bias, m, 1, 1)
}

pub(crate) fn linear_backward(
    input: &Tensor2D,
    weight: &[f64],
    grad_out: &Tensor2D,
    grad_input: Option<&mut Tensor2D>,
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
) {
    conv1d_backward(
        input,
        weight,
        grad_out,
        1,
        1,
        grad_input,
        grad_weight,
        grad_bias,
    )
}
