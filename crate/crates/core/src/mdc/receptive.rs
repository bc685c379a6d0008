use super::config::{BranchConfig, DetectorConfig};

/// Receptive field of a branch's stacked MDC blocks alone.
///
/// Each block widens the field by `(kernel - 1) * d3`, the largest dilation.
pub fn stack_receptive_field(branch: &BranchConfig) -> usize {
    let d3 = branch.block.dilations.iter().copied().max().unwrap_or(1);
    1 + branch.depth * (branch.block.kernel_size - 1) * d3
}

/// Receptive field of the MDC stack extended by undilated convolutions with the given kernels.
pub fn receptive_field(branch: &BranchConfig, extra_kernels: &[usize]) -> usize {
    stack_receptive_field(branch) + extra_kernels.iter().map(|k| k - 1).sum::<usize>()
}

/// Per-branch receptive field over the whole detector (shared stack, branch, head).
pub fn detector_receptive_fields(config: &DetectorConfig) -> Vec<usize> {
    let extra: Vec<usize> = config
        .shared_kernels
        .iter()
        .chain(&config.head_kernels)
        .copied()
        .collect();
    config
        .branches()
        .iter()
        .map(|b| receptive_field(b, &extra))
        .collect()
}
