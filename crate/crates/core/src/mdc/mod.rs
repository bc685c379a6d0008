//! Multi-dilation temporal convolution (MDC) blocks, the multi-branch
//! critical-point detector built from them, and its training loop.

mod config;
mod network;
mod receptive;
mod train;

pub use config::{BranchConfig, ConvLayer, DetectorConfig, MdcBlockConfig, CRITICAL_POINT_KINDS};
pub use network::{mdc_block_forward, ConvParams, Detector, MdcBlockParams, ProbabilityTriple};
pub use receptive::{detector_receptive_fields, receptive_field, stack_receptive_field};
pub use train::{train_detector, TrainReport, TrainingExample};

pub(crate) use train::epoch_rng;
