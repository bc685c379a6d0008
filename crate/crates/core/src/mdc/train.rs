use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::network::Detector;
use crate::autodiff::{Optimizer, Tensor2D};
use crate::error::{Error, Result};
use crate::labeling::LabelTriple;
use crate::schedule::TrainSchedule;

/// One training video: features and aligned targets.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub features: Tensor2D,
    pub labels: LabelTriple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-video loss for every epoch.
    pub epoch_losses: Vec<f64>,
}

/// Seed stream for one epoch, derived from the schedule seed.
pub(crate) fn epoch_rng(seed: u64, stream: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(1_000_003).wrapping_add(epoch as u64));
    rng
}

/// Trains the detector in place on the summed start/mid/end cross-entropy.
///
/// Videos longer than `window` are cropped to a random window each epoch.
/// Batch items run in parallel; their gradients are reduced in batch order,
/// so results do not depend on the thread count.
pub fn train_detector(
    detector: &mut Detector,
    data: &[TrainingExample],
    schedule: &TrainSchedule,
    window: usize,
) -> Result<TrainReport> {
    schedule.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "detector training needs at least one video".into(),
        ));
    }
    if window == 0 {
        return Err(Error::Config("training window must be positive".into()));
    }
    for (i, ex) in data.iter().enumerate() {
        if ex.labels.len() != ex.features.time() {
            return Err(Error::shape(
                "train_detector",
                format!(
                    "video {i}: {} labels for {} time steps",
                    ex.labels.len(),
                    ex.features.time()
                ),
            ));
        }
    }

    let mut optimizer = Optimizer::new(schedule.optimizer_kind(), detector.params());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(schedule.max_epochs);

    for epoch in 0..schedule.max_epochs {
        let mut rng = epoch_rng(schedule.seed, 1, epoch);
        order.shuffle(&mut rng);
        let crops: Vec<usize> = order
            .iter()
            .map(|&i| {
                let t = data[i].features.time();
                if t > window {
                    rng.random_range(0..=t - window)
                } else {
                    0
                }
            })
            .collect();

        let lr = schedule.learning_rate(epoch);
        let mut total = 0.0;
        for (batch_idx, (ids, offsets)) in order
            .chunks(schedule.batch_size)
            .zip(crops.chunks(schedule.batch_size))
            .enumerate()
        {
            let det = &*detector;
            let results: Vec<Result<_>> = ids
                .par_iter()
                .zip(offsets.par_iter())
                .map(|(&i, &offset)| {
                    let ex = &data[i];
                    let len = ex.features.time().min(window);
                    if len == ex.features.time() {
                        det.loss_and_gradients(&ex.features, &ex.labels)
                    } else {
                        det.loss_and_gradients(
                            &ex.features.window(offset, len),
                            &ex.labels.window(offset, len),
                        )
                    }
                })
                .collect();
            let scale = 1.0 / ids.len() as f64;
            for res in results {
                let (loss, grads) = res.map_err(|e| match e {
                    Error::NonFinite(op) => Error::NonFinite(format!(
                        "{op} (detector training, epoch {epoch}, batch {batch_idx})"
                    )),
                    other => other,
                })?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "detector loss at epoch {epoch}, batch {batch_idx}"
                    )));
                }
                total += loss;
                detector.params_mut().accumulate(&grads, scale);
            }
            optimizer.step(detector.params_mut(), lr);
        }
        let mean = total / data.len() as f64;
        log::info!("detector epoch {epoch}: lr {lr} mean loss {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok(TrainReport { epoch_losses })
}
