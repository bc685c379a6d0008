//! Synthetic untrimmed videos with planted action instances, and the binary
//! feature-file format shared with real feature readers.
//!
//! # Feature file
//!
//! A file is a concatenation of records, one per video, each laid out as
//!
//! ```text
//! "TSAF"  version:u16  id_len:u32  id bytes  T:u32  D:u32  stride:u32  D*T f64
//! ```
//!
//! All integers and floats are little-endian. Values are stored feature
//! dimension major, so the `T` values of dimension 0 come first.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor2D;
use crate::error::{Error, Result};
use crate::labeling::{AnnotationSet, Instance};

pub const FEATURE_MAGIC: &[u8; 4] = b"TSAF";
pub const FEATURE_VERSION: u16 = 1;

/// Attempts at packing one video before generation gives up.
pub const MAX_PACKING_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub video_count: usize,
    /// Snippets per video.
    pub video_length: usize,
    pub feature_dim: usize,
    /// Inclusive bounds on the number of planted instances.
    pub instances_per_video: [usize; 2],
    /// Inclusive bounds on instance duration as a fraction of `video_length`.
    pub duration_fraction: [f64; 2],
    pub class_count: u32,
    pub noise_std: f64,
    pub signal_strength: f64,
    /// Minimum number of background snippets between neighbouring instances.
    pub min_gap: usize,
    pub stride: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            video_count: 250,
            video_length: 256,
            feature_dim: 16,
            instances_per_video: [1, 4],
            duration_fraction: [0.04, 0.40],
            class_count: 4,
            noise_std: 1.0,
            signal_strength: 1.0,
            min_gap: 2,
            stride: 8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Integer duration bounds after rounding into the configured fraction range.
    pub fn duration_bounds(&self) -> (usize, usize) {
        let t = self.video_length as f64;
        let lo = (self.duration_fraction[0] * t - 1e-9).ceil().max(1.0) as usize;
        let hi = (self.duration_fraction[1] * t + 1e-9).floor() as usize;
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let [f_lo, f_hi] = self.duration_fraction;
        let [n_lo, n_hi] = self.instances_per_video;
        let problem = if self.video_count == 0 || self.video_length < 2 || self.feature_dim == 0 {
            Some(
                "video_count, feature_dim must be positive and video_length at least 2".to_string(),
            )
        } else if !(f_lo > 0.0 && f_lo <= f_hi && f_hi < 1.0) {
            Some(format!(
                "duration_fraction must satisfy 0 < lo <= hi < 1, got [{f_lo}, {f_hi}]"
            ))
        } else if n_lo > n_hi {
            Some(format!(
                "instances_per_video range [{n_lo}, {n_hi}] is empty"
            ))
        } else if self.class_count == 0 {
            Some("class_count must be positive".to_string())
        } else if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            Some(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            ))
        } else if !self.signal_strength.is_finite() {
            Some("signal_strength must be finite".to_string())
        } else {
            let (lo, hi) = self.duration_bounds();
            (lo > hi).then(|| {
                format!(
                    "no integer duration fits in fraction range [{f_lo}, {f_hi}] of {} snippets",
                    self.video_length
                )
            })
        };
        match problem {
            Some(p) => Err(Error::Config(format!("synth: {p}"))),
            None => Ok(()),
        }
    }
}

/// Per-snippet features of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video_id: String,
    pub stride: u32,
    /// `D x T` matrix.
    pub features: Tensor2D,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.features.time()
    }

    pub fn is_empty(&self) -> bool {
        self.features.time() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.channels()
    }
}

/// Unit-RMS pattern vector per class, drawn from stream 0 of the dataset seed.
pub fn class_patterns(cfg: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..cfg.class_count)
        .map(|_| {
            let mut v: Vec<f64> = (0..cfg.feature_dim)
                .map(|_| normal.sample(&mut rng))
                .collect();
            let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
            v.iter_mut().for_each(|x| *x /= rms);
            v
        })
        .collect()
}

/// Onset/offset envelope of an instance covering snippets `start..=end`.
pub fn ramp_envelope(t: usize, start: usize, end: usize) -> f64 {
    if t < start || t > end {
        return 0.0;
    }
    let width = (0.05 * (end - start) as f64).round().max(1.0);
    let from_edge = (t - start).min(end - t) as f64;
    ((from_edge + 1.0) / (width + 1.0)).min(1.0)
}

fn log_uniform_duration(rng: &mut impl Rng, cfg: &SynthConfig) -> usize {
    let t = cfg.video_length as f64;
    let (lo, hi) = (cfg.duration_fraction[0] * t, cfg.duration_fraction[1] * t);
    let x = if lo == hi {
        lo
    } else {
        (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
    };
    let (dlo, dhi) = cfg.duration_bounds();
    (x.round() as usize).clamp(dlo, dhi)
}

/// Draws durations until they fit, then spreads the leftover room uniformly
/// over the gaps before, between and after the instances.
fn pack_instances(rng: &mut impl Rng, cfg: &SynthConfig, video: &str) -> Result<Vec<Instance>> {
    let count = rng.random_range(cfg.instances_per_video[0]..=cfg.instances_per_video[1]);
    if count == 0 {
        return Ok(Vec::new());
    }
    let last_index = cfg.video_length - 1;
    for _ in 0..MAX_PACKING_ATTEMPTS {
        let durations: Vec<usize> = (0..count).map(|_| log_uniform_duration(rng, cfg)).collect();
        let needed = durations.iter().sum::<usize>() + (count - 1) * cfg.min_gap;
        let Some(slack) = last_index.checked_sub(needed) else {
            continue;
        };
        let mut cuts: Vec<usize> = (0..count).map(|_| rng.random_range(0..=slack)).collect();
        cuts.sort_unstable();
        let mut instances = Vec::with_capacity(count);
        let (mut cursor, mut used) = (0, 0);
        for (&d, &cut) in durations.iter().zip(&cuts) {
            let start = cursor + (cut - used);
            used = cut;
            let class_id = rng.random_range(0..cfg.class_count);
            instances.push(Instance::new(start as f64, (start + d) as f64, class_id));
            cursor = start + d + cfg.min_gap;
        }
        return Ok(instances);
    }
    Err(Error::Config(format!(
        "synth: could not pack {count} non-overlapping instances into {video} ({} snippets, \
         durations {:?}, gap {}) after {MAX_PACKING_ATTEMPTS} attempts",
        cfg.video_length,
        cfg.duration_bounds(),
        cfg.min_gap
    )))
}

fn generate_video(
    cfg: &SynthConfig,
    patterns: &[Vec<f64>],
    index: usize,
) -> Result<(FeatureSequence, AnnotationSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64 + 1);
    let video_id = format!("video_{index:04}");
    let instances = pack_instances(&mut rng, cfg, &video_id)?;

    let t_len = cfg.video_length;
    let noise = Normal::new(0.0, cfg.noise_std).expect("validated noise_std");
    let mut features = Tensor2D::zeros(cfg.feature_dim, t_len);
    for v in features.values_mut() {
        *v = noise.sample(&mut rng);
    }
    for inst in &instances {
        let (s, e) = (inst.start as usize, inst.end as usize);
        let pattern = &patterns[inst.class_id as usize];
        for (k, &p) in pattern.iter().enumerate() {
            let row = features.row_mut(k);
            for (t, v) in row.iter_mut().enumerate().take(e + 1).skip(s) {
                *v += cfg.signal_strength * ramp_envelope(t, s, e) * p;
            }
        }
    }
    let annotations = AnnotationSet::new(video_id.clone(), t_len, cfg.stride, instances)?;
    let sequence = FeatureSequence {
        video_id,
        stride: cfg.stride,
        features,
    };
    Ok((sequence, annotations))
}

/// Generates `cfg.video_count` videos; the output is independent of thread count.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Vec<(FeatureSequence, AnnotationSet)>> {
    cfg.validate()?;
    let patterns = class_patterns(cfg);
    (0..cfg.video_count)
        .into_par_iter()
        .map(|i| generate_video(cfg, &patterns, i))
        .collect()
}

/// Splits `0..count` into sorted train and validation index lists.
pub fn train_val_split(count: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    order.shuffle(&mut rng);
    let n_train = (count as f64 * train_fraction).round() as usize;
    let (train, val) = order.split_at(n_train.min(count));
    let (mut train, mut val) = (train.to_vec(), val.to_vec());
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub fn encode_features(sequences: &[FeatureSequence]) -> Vec<u8> {
    let payload: usize = sequences
        .iter()
        .map(|s| 22 + s.video_id.len() + 8 * s.features.len())
        .sum();
    let mut out = Vec::with_capacity(payload);
    for s in sequences {
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(s.video_id.len() as u32).to_le_bytes());
        out.extend_from_slice(s.video_id.as_bytes());
        out.extend_from_slice(&(s.features.time() as u32).to_le_bytes());
        out.extend_from_slice(&(s.features.channels() as u32).to_le_bytes());
        out.extend_from_slice(&s.stride.to_le_bytes());
        for v in s.features.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(
                self.origin,
                format!(
                    "truncated at byte {} while reading {what} ({n} bytes needed, {} left)",
                    self.pos,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_features(bytes: &[u8], origin: &Path) -> Result<Vec<FeatureSequence>> {
    let mut r = Reader {
        bytes,
        pos: 0,
        origin,
    };
    let mut out = Vec::new();
    while r.pos < bytes.len() {
        let record_at = r.pos;
        let magic = r.take(4, "magic")?;
        if magic != FEATURE_MAGIC {
            return Err(Error::format(
                origin,
                format!("bad magic {magic:?} at byte {record_at}, expected \"TSAF\""),
            ));
        }
        let version = r.u16("version")?;
        if version != FEATURE_VERSION {
            return Err(Error::format(
                origin,
                format!("unsupported feature file version {version} (expected {FEATURE_VERSION})"),
            ));
        }
        let id_len = r.u32("video id length")? as usize;
        let video_id = std::str::from_utf8(r.take(id_len, "video id")?)
            .map_err(|_| {
                Error::format(origin, format!("video id at byte {record_at} is not UTF-8"))
            })?
            .to_string();
        let t = r.u32("T")? as usize;
        let d = r.u32("D")? as usize;
        let stride = r.u32("stride")?;
        let raw = r.take(8 * d * t, "feature values")?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(
                origin,
                format!("video {video_id} has non-finite features"),
            ));
        }
        let features = Tensor2D::new(d, t, values)?;
        out.push(FeatureSequence {
            video_id,
            stride,
            features,
        });
    }
    Ok(out)
}

pub fn write_features(path: &Path, sequences: &[FeatureSequence]) -> Result<()> {
    std::fs::write(path, encode_features(sequences))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureSequence>> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode_features(&bytes, path)
}
