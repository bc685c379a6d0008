use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One MDC block: three parallel same-kernel convolutions with different dilation rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdcBlockConfig {
    pub dilations: [usize; 3],
    pub kernel_size: usize,
    pub channels: usize,
}

impl MdcBlockConfig {
    /// Checks the `d1 < d2 < d3` ordering, odd kernel and positive width.
    pub fn validate(&self) -> Result<()> {
        let [d1, d2, d3] = self.dilations;
        if d1 == 0 || !(d1 < d2 && d2 < d3) {
            return Err(Error::Config(format!(
                "MDC dilations must satisfy 0 < d1 < d2 < d3, got {:?}",
                self.dilations
            )));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "MDC kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.channels == 0 {
            return Err(Error::Config("MDC channel count must be positive".into()));
        }
        Ok(())
    }
}

/// A stack of `depth` identical-shaped MDC blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchConfig {
    pub block: MdcBlockConfig,
    pub depth: usize,
}

/// A plain convolution layer in the shared front stack or the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub channels: usize,
    pub kernel: usize,
}

/// Architecture of the critical-point detector.
///
/// Every hidden layer shares one width (`channels`) because the MDC skip
/// connections and the cross-branch average both need matching channel counts.
/// The head always ends in a kernel-`head_kernels.last()` layer with 3 outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub input_dim: usize,
    pub channels: usize,
    pub shared_kernels: Vec<usize>,
    pub branch_dilations: Vec<[usize; 3]>,
    pub branch_depth: usize,
    pub mdc_kernel: usize,
    pub head_kernels: Vec<usize>,
}

/// Number of output sequences: start, mid, end.
pub const CRITICAL_POINT_KINDS: usize = 3;

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            input_dim: 16,
            channels: 128,
            shared_kernels: vec![3, 3],
            branch_dilations: vec![[1, 2, 3], [1, 3, 5], [1, 5, 7]],
            branch_depth: 2,
            mdc_kernel: 3,
            head_kernels: vec![3, 1],
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.channels == 0 {
            return Err(Error::Config(
                "detector input_dim and channels must be positive".into(),
            ));
        }
        if self.branch_dilations.is_empty() {
            return Err(Error::Config("detector needs at least one branch".into()));
        }
        if self.branch_depth == 0 {
            return Err(Error::Config("branch depth must be >= 1".into()));
        }
        if self.head_kernels.is_empty() {
            return Err(Error::Config(
                "detector head needs at least one convolution".into(),
            ));
        }
        if let Some(k) = self
            .shared_kernels
            .iter()
            .chain(&self.head_kernels)
            .find(|k| *k % 2 == 0)
        {
            return Err(Error::Config(format!("kernel sizes must be odd, got {k}")));
        }
        for branch in self.branches() {
            branch.block.validate()?;
        }
        Ok(())
    }

    pub fn branches(&self) -> Vec<BranchConfig> {
        self.branch_dilations
            .iter()
            .map(|&dilations| BranchConfig {
                block: MdcBlockConfig {
                    dilations,
                    kernel_size: self.mdc_kernel,
                    channels: self.channels,
                },
                depth: self.branch_depth,
            })
            .collect()
    }

    pub fn shared_layers(&self) -> Vec<ConvLayer> {
        self.shared_kernels
            .iter()
            .map(|&kernel| ConvLayer {
                channels: self.channels,
                kernel,
            })
            .collect()
    }

    pub fn head_layers(&self) -> Vec<ConvLayer> {
        let last = self.head_kernels.len() - 1;
        self.head_kernels
            .iter()
            .enumerate()
            .map(|(i, &kernel)| ConvLayer {
                channels: if i == last {
                    CRITICAL_POINT_KINDS
                } else {
                    self.channels
                },
                kernel,
            })
            .collect()
    }

    /// Same network with only the listed branch kept.
    pub fn single_branch(&self, dilations: [usize; 3]) -> Self {
        DetectorConfig {
            branch_dilations: vec![dilations],
            ..self.clone()
        }
    }
}
