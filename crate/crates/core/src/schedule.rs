use serde::{Deserialize, Serialize};

use crate::autodiff::OptimizerKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Sgd,
    Adam,
}

/// Minibatch schedule with a single step decay of the learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSchedule {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// First epoch (0-based) that uses `decayed_learning_rate`.
    pub decay_epoch: usize,
    pub decayed_learning_rate: f64,
    pub optimizer: OptimizerName,
    /// Heavy-ball momentum for SGD; 0 means plain SGD.
    pub momentum: f64,
    pub seed: u64,
}

impl TrainSchedule {
    /// Detector defaults: batch 16, lr 0.001 for epochs 0-9 then 0.0001, 20 epochs.
    pub fn detector_default() -> Self {
        TrainSchedule {
            batch_size: 16,
            max_epochs: 20,
            learning_rate: 1e-3,
            decay_epoch: 10,
            decayed_learning_rate: 1e-4,
            optimizer: OptimizerName::Sgd,
            momentum: 0.0,
            seed: 0,
        }
    }

    /// Ranking-network defaults: same learning-rate scheme with batches of 256.
    pub fn phi_default() -> Self {
        TrainSchedule {
            batch_size: 256,
            ..Self::detector_default()
        }
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if epoch < self.decay_epoch {
            self.learning_rate
        } else {
            self.decayed_learning_rate
        }
    }

    pub fn optimizer_kind(&self) -> OptimizerKind {
        match self.optimizer {
            OptimizerName::Sgd => OptimizerKind::Sgd {
                momentum: self.momentum,
            },
            OptimizerName::Adam => OptimizerKind::adam(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "batch_size and max_epochs must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.decayed_learning_rate > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}
