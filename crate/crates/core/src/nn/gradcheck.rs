//! Numerical verification of the backward pass: compares every analytic
//! gradient against central finite differences on randomly drawn small
//! networks. Configurations whose pre-activations sit close to a ReLU kink or
//! a max-pool tie are redrawn, since finite differences are invalid across
//! those non-smooth points.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};

use super::model::{CnnModel, ModelConfig, Target};

/// Step size for central differences.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance on each gradient component.
pub const FD_TOLERANCE: f64 = 1e-4;
/// Pre-activations closer than this to a kink disqualify a configuration.
const KINK_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub configs_checked: usize,
    pub parameters_checked: usize,
    pub max_relative_error: f64,
    pub redrawn_configs: usize,
}

/// Checks `n_configs` random tiny networks. Errors on the first gradient
/// component whose relative error exceeds the tolerance.
pub fn check_gradients(n_configs: usize, base_seed: u64) -> Result<GradCheckReport> {
    let mut report = GradCheckReport {
        configs_checked: 0,
        parameters_checked: 0,
        max_relative_error: 0.0,
        redrawn_configs: 0,
    };
    let mut attempt = 0u64;
    while report.configs_checked < n_configs {
        if attempt > 40 * n_configs as u64 {
            return Err(Error::Training(
                "gradient check could not find enough smooth configurations".into(),
            ));
        }
        let seed = base_seed.wrapping_add(attempt);
        attempt += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let output_units = if rng.random_bool(0.5) { 1 } else { 4 };
        let config = ModelConfig {
            conv1_filters: rng.random_range(1..=3),
            conv2_filters: rng.random_range(1..=2),
            fc1_units: rng.random_range(2..=5),
            output_units,
            ..ModelConfig::default_binary(seed)
        };
        let input_len = rng.random_range(12..=20);
        let mut model = CnnModel::init_with_rng(config, input_len, &mut rng)?;

        let batch_len = rng.random_range(1..=3);
        let mut features = Vec::with_capacity(batch_len);
        let mut targets = Vec::with_capacity(batch_len);
        for _ in 0..batch_len {
            features.push(FeatureVector(
                (0..input_len).map(|_| rng.random_range(0.0..1.0)).collect(),
            ));
            targets.push(match output_units {
                1 => Target::Binary(rng.random_range(0..=1)),
                _ => Target::Class(rng.random_range(0..4)),
            });
        }

        if !is_smooth_at(&model, &features)? {
            report.redrawn_configs += 1;
            continue;
        }

        let batch: Vec<(&FeatureVector, Target)> =
            features.iter().zip(targets.iter().copied()).collect();
        let (_, analytic) = model.backward_batch(&batch)?;
        let analytic_tensors: Vec<_> =
            analytic.tensors().iter().map(|t| t.values().to_vec()).collect();

        for (ti, grads) in analytic_tensors.iter().enumerate() {
            for j in 0..grads.len() {
                let numeric = central_difference(&mut model, &features, &targets, ti, j)?;
                let a = grads[j];
                let denom = a.abs().max(numeric.abs()).max(KINK_GUARD);
                let rel = (a - numeric).abs() / denom;
                report.max_relative_error = report.max_relative_error.max(rel);
                if rel > FD_TOLERANCE {
                    return Err(Error::Training(format!(
                        "gradient mismatch (seed {seed}, tensor {ti}, index {j}): \
                         analytic {a}, numeric {numeric}, relative error {rel}"
                    )));
                }
                report.parameters_checked += 1;
            }
        }
        report.configs_checked += 1;
    }
    Ok(report)
}

/// Rejects configurations where a finite-difference step could cross a ReLU
/// kink or flip a max-pool argmax.
fn is_smooth_at(model: &CnnModel, features: &[FeatureVector]) -> Result<bool> {
    let pool = model.config.pool_size;
    for f in features {
        let cache = model.forward(f)?;
        for pre in [&cache.conv1_pre, &cache.conv2_pre, &cache.fc1_pre] {
            if pre.values().iter().any(|v| v.abs() < KINK_GUARD) {
                return Ok(false);
            }
        }
        // Max-pool windows over the first convolution's activations.
        let act = super::layers::relu(&cache.conv1_pre);
        let [channels, length] = [act.shape()[0], act.shape()[1]];
        for c in 0..channels {
            for w in 0..length / pool {
                let mut top = f64::NEG_INFINITY;
                let mut second = f64::NEG_INFINITY;
                for off in 0..pool {
                    let v = act.at2(c, w * pool + off);
                    if v > top {
                        second = top;
                        top = v;
                    } else if v > second {
                        second = v;
                    }
                }
                if top > 0.0 && (top - second) < KINK_GUARD {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// (f(θ+h) − f(θ−h)) / 2h for one scalar parameter, where f is the mean
/// batch loss.
fn central_difference(
    model: &mut CnnModel,
    features: &[FeatureVector],
    targets: &[Target],
    tensor_idx: usize,
    value_idx: usize,
) -> Result<f64> {
    nudge(model, tensor_idx, value_idx, FD_STEP);
    let plus = mean_loss(model, features, targets)?;
    nudge(model, tensor_idx, value_idx, -2.0 * FD_STEP);
    let minus = mean_loss(model, features, targets)?;
    nudge(model, tensor_idx, value_idx, FD_STEP);
    Ok((plus - minus) / (2.0 * FD_STEP))
}

fn nudge(model: &mut CnnModel, tensor_idx: usize, value_idx: usize, delta: f64) {
    model.params_mut()[tensor_idx].values_mut()[value_idx] += delta;
}

fn mean_loss(model: &CnnModel, features: &[FeatureVector], targets: &[Target]) -> Result<f64> {
    let mut sum = 0.0;
    for (f, t) in features.iter().zip(targets) {
        let cache = model.forward(f)?;
        sum += model.loss(&cache, *t)?;
    }
    Ok(sum / features.len() as f64)
}
