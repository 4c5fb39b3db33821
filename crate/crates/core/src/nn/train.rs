//! Mini-batch training loop: seeded shuffling, SGD with momentum, and a
//! per-epoch trace of loss/accuracy on the train and validation splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSplit, FeatureVector, Sample};
use crate::error::{Error, Result};

use super::model::{CnnModel, ModelConfig, Target, TaskKind};
use super::optim::SgdMomentum;

/// Loss and accuracy measured after each epoch's updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

fn target_of(sample: &Sample, task: TaskKind) -> Target {
    match task {
        TaskKind::Binary => Target::Binary(sample.binary.id() as u8),
        TaskKind::Multiclass => Target::Class(sample.label4.id()),
    }
}

fn actual_label(sample: &Sample, task: TaskKind) -> usize {
    match task {
        TaskKind::Binary => sample.binary.id(),
        TaskKind::Multiclass => sample.label4.id(),
    }
}

/// Mean loss and accuracy of the model over a labeled sample list.
pub fn dataset_loss_accuracy(model: &CnnModel, samples: &[Sample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::data("cannot score an empty sample list"));
    }
    let task = model.task();
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let cache = model.forward(&s.features)?;
        loss_sum += model.loss(&cache, target_of(s, task))?;
        let predicted = match task {
            TaskKind::Binary => usize::from(cache.probs[0] >= 0.5),
            TaskKind::Multiclass => cache
                .probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                .map(|(i, _)| i)
                .expect("non-empty distribution"),
        };
        if predicted == actual_label(s, task) {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    Ok((loss_sum / n, correct as f64 / n))
}

/// Trains a fresh model on the split. The task (two-way or four-way) follows
/// the config's output width. Deterministic for a fixed config seed.
pub fn train(config: &ModelConfig, split: &DatasetSplit) -> Result<(CnnModel, Vec<EpochTrace>)> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(Error::data("training split is empty"));
    }
    if split.validation.is_empty() {
        return Err(Error::data("validation split is empty"));
    }
    let input_len = split.train[0].features.len();
    for s in split.train.iter().chain(&split.validation) {
        if s.features.len() != input_len {
            return Err(Error::Shape(format!(
                "inconsistent feature widths: {} vs {input_len}",
                s.features.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = CnnModel::init_with_rng(config.clone(), input_len, &mut rng)?;
    let trace = train_loop(&mut model, split, &mut rng)?;
    Ok((model, trace))
}

/// The epoch loop over an already-initialized model; `rng` drives the batch
/// shuffle order.
pub(crate) fn train_loop(
    model: &mut CnnModel,
    split: &DatasetSplit,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<EpochTrace>> {
    let config = model.config.clone();
    let task = model.task();
    let mut optimizer = SgdMomentum::new(config.learning_rate, config.momentum, model);
    let mut indices: Vec<usize> = (0..split.train.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        indices.shuffle(rng);
        for (batch_no, chunk) in indices.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&FeatureVector, Target)> = chunk
                .iter()
                .map(|&i| (&split.train[i].features, target_of(&split.train[i], task)))
                .collect();
            let (loss, grads) = model.backward_batch(&batch).map_err(|e| match e {
                Error::Training(msg) => Error::Training(format!(
                    "{msg} at epoch {epoch}, batch {batch_no}; \
                     lower the learning rate or check the input scaling"
                )),
                other => other,
            })?;
            debug_assert!(loss.is_finite(), "checked in backward_batch");
            optimizer.step(model, &grads)?;
        }
        let (train_loss, train_accuracy) = dataset_loss_accuracy(model, &split.train)?;
        let (val_loss, val_accuracy) = dataset_loss_accuracy(model, &split.validation)?;
        trace.push(EpochTrace {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });
    }
    Ok(trace)
}
