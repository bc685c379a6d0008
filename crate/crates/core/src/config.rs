//! Whole-pipeline configuration as a sectioned TOML document.
//!
//! A file only needs the keys it changes; everything else keeps its default.
//! Unknown sections and keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalSettings, IoUGrid};
use crate::labeling::DEFAULT_INFLATION;
use crate::mdc::DetectorConfig;
use crate::proposal::{NmsConfig, PairingConfig};
use crate::schedule::TrainSchedule;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelingConfig {
    /// Half-width of each positive region as a fraction of instance length.
    pub inflation: f64,
    /// Crop length used to make training batches rectangular.
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSamplingConfig {
    /// Cap on overlapping training pairs drawn from one video.
    pub max_positive_per_video: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalConfig {
    pub mid_threshold: f64,
    pub point_threshold: f64,
    pub top_k: usize,
}

impl ProposalConfig {
    pub fn pairing(&self, d_min: f64, d_max: f64) -> PairingConfig {
        PairingConfig {
            d_min,
            d_max,
            mid_threshold: self.mid_threshold,
            point_threshold: self.point_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    pub an_points: Vec<usize>,
    pub auc_an_max: usize,
    pub recall_an: usize,
    pub recall_iou_points: Vec<f64>,
    pub map_thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let s = EvalSettings::default();
        EvalConfig {
            iou_thresholds: s.grid.thresholds().to_vec(),
            an_points: s.an_points,
            auc_an_max: s.auc_an_max,
            recall_an: s.recall_an,
            recall_iou_points: s.recall_iou_points,
            map_thresholds: s.map_thresholds,
        }
    }
}

impl EvalConfig {
    pub fn settings(&self) -> Result<EvalSettings> {
        let grid = IoUGrid::new(self.iou_thresholds.clone())
            .map_err(|e| Error::Config(format!("eval.iou_thresholds: {e}")))?;
        Ok(EvalSettings {
            grid,
            an_points: self.an_points.clone(),
            auc_an_max: self.auc_an_max,
            recall_an: self.recall_an,
            recall_iou_points: self.recall_iou_points.clone(),
            map_thresholds: self.map_thresholds.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub labeling: LabelingConfig,
    pub detector: DetectorConfig,
    pub detector_training: TrainSchedule,
    pub phi_training: TrainSchedule,
    pub phi_sampling: PhiSamplingConfig,
    pub proposals: ProposalConfig,
    pub nms: NmsConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            synth: SynthConfig::default(),
            split: SplitConfig {
                train_fraction: 0.8,
            },
            labeling: LabelingConfig {
                inflation: DEFAULT_INFLATION,
                window: 256,
            },
            detector: DetectorConfig::default(),
            detector_training: TrainSchedule::detector_default(),
            phi_training: TrainSchedule::phi_default(),
            phi_sampling: PhiSamplingConfig {
                max_positive_per_video: 256,
            },
            proposals: ProposalConfig {
                mid_threshold: 0.5,
                point_threshold: 0.9,
                top_k: 200,
            },
            nms: NmsConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Overlays `user` onto `base`, descending into tables present in both.
fn merge(base: &mut toml::Table, user: toml::Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let mut table = toml::Table::try_from(RunConfig::default())
            .map_err(|e| Error::Config(format!("cannot serialize defaults: {e}")))?;
        merge(&mut table, user);
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Uses one seed for data generation, the split and both training runs.
    pub fn set_seed(&mut self, seed: u64) {
        self.synth.seed = seed;
        self.detector_training.seed = seed;
        self.phi_training.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.detector.validate()?;
        self.detector_training.validate()?;
        self.phi_training.validate()?;
        if self.detector.input_dim != self.synth.feature_dim {
            return Err(Error::Config(format!(
                "detector.input_dim ({}) differs from synth.feature_dim ({})",
                self.detector.input_dim, self.synth.feature_dim
            )));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split.train_fraction must lie in (0, 1), got {}",
                self.split.train_fraction
            )));
        }
        if !(self.labeling.inflation >= 0.0 && self.labeling.inflation.is_finite()) {
            return Err(Error::Config(format!(
                "labeling.inflation must be a non-negative number, got {}",
                self.labeling.inflation
            )));
        }
        if self.labeling.window == 0 || self.proposals.top_k == 0 {
            return Err(Error::Config(
                "labeling.window and proposals.top_k must be positive".into(),
            ));
        }
        self.proposals.pairing(1.0, 1.0).validate()?;
        if !(0.0..=1.0).contains(&self.nms.iou_threshold) {
            return Err(Error::Config(format!(
                "nms.iou_threshold must lie in [0, 1], got {}",
                self.nms.iou_threshold
            )));
        }
        if self.nms.soft_sigma.is_nan() || self.nms.soft_sigma <= 0.0 {
            return Err(Error::Config("nms.soft_sigma must be positive".into()));
        }
        self.eval.settings()?;
        Ok(())
    }
}
