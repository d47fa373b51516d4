use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TrainConfig};
use super::model::{CategoryInputs, FusionModel};
use super::sample::Sample;
use crate::error::{Error, Result};
use crate::neural::{cosine_lr, AdamW, Mode, Parameterized};
use crate::seed::{run_rng, Stream};

/// Identifies one training run for seed derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub master: u64,
    pub run: u64,
    pub fold: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FusionModel,
    /// Gate value after each epoch.
    pub alpha_trace: Vec<f64>,
    /// Mean training loss per epoch.
    pub epoch_loss: Vec<f64>,
}

impl TrainOutcome {
    pub fn alpha_final(&self) -> f64 {
        self.alpha_trace.last().copied().unwrap_or_else(|| self.model.alpha())
    }
}

/// Trains a fresh model on `samples` with the full recipe. Initialization,
/// shuffling and dropout each draw from their own stream of `seeds`.
pub fn train_model(
    config: &ModelConfig,
    train: &TrainConfig,
    samples: &[&Sample],
    cats: CategoryInputs<'_>,
    seeds: RunSeeds,
) -> Result<TrainOutcome> {
    train.validate()?;
    if samples.is_empty() {
        return Err(Error::Config(format!("fold {}: no training samples", seeds.fold)));
    }
    let mut init_rng = run_rng(seeds.master, seeds.run, seeds.fold, Stream::Init);
    let mut shuffle_rng = run_rng(seeds.master, seeds.run, seeds.fold, Stream::Shuffle);
    let mut dropout_rng = run_rng(seeds.master, seeds.run, seeds.fold, Stream::Dropout);
    let mut model = FusionModel::new(config.clone(), cats, &mut init_rng)?;
    let mut opt = AdamW::new(train.adamw.clone(), train.schedule.base_lr);
    let epochs = train.schedule.total_epochs;
    let mut alpha_trace = Vec::with_capacity(epochs);
    let mut epoch_loss = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..samples.len()).collect();

    for epoch in 0..epochs {
        opt.lr = cosine_lr(&train.schedule, epoch);
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(train.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| samples[i]).collect();
            model.zero_grad();
            let loss = model.accumulate_batch(&batch, Mode::Train, &mut dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "{}: loss {loss} at fold {} epoch {epoch} batch {b}",
                    config.name, seeds.fold
                )));
            }
            opt.step(&mut model.params_mut()).map_err(|e| match e {
                Error::NonFinite(msg) => Error::NonFinite(format!(
                    "{}: fold {} epoch {epoch} batch {b}: {msg}",
                    config.name, seeds.fold
                )),
                other => other,
            })?;
            total += loss * batch.len() as f64;
        }
        epoch_loss.push(total / samples.len() as f64);
        alpha_trace.push(model.alpha());
        log::debug!(
            "{} fold {} epoch {epoch}: loss {:.4} alpha {:.4}",
            config.name,
            seeds.fold,
            epoch_loss[epoch],
            model.alpha()
        );
    }
    model.zero_grad();
    Ok(TrainOutcome {
        model,
        alpha_trace,
        epoch_loss,
    })
}
