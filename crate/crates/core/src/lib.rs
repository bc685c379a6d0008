//! Temporal action proposal toolkit: a small reverse-mode autodiff engine,
//! multi-dilation convolutional critical-point detection, proposal pairing
//! and ranking, proposal metrics, and a synthetic data generator.

pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod eval;
pub mod labeling;
pub mod mdc;
pub mod pipeline;
pub mod proposal;
pub mod schedule;
pub mod synth;

pub use config::RunConfig;
pub use error::{Error, ErrorKind, Result};
