//! Cross-entropy losses for the sigmoid and softmax heads. Probabilities are
//! clipped away from 0 and 1 so a confident miss cannot produce log(0).

use serde::{Deserialize, Serialize};

/// Clipping bound for predicted probabilities.
pub const PROB_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    BinaryCrossentropy,
    CategoricalCrossentropy,
}

fn clip(p: f64) -> f64 {
    p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
}

/// −[t·ln p + (1−t)·ln(1−p)] for a scalar probability and 0/1 target.
pub fn binary_crossentropy(p: f64, target: f64) -> f64 {
    let p = clip(p);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// −ln p[target] for a probability vector and class index target.
pub fn categorical_crossentropy(probs: &[f64], target: usize) -> f64 {
    -clip(probs[target]).ln()
}

/// Mean of per-sample losses.
pub fn batch_mean(losses: &[f64]) -> f64 {
    if losses.is_empty() {
        return 0.0;
    }
    losses.iter().sum::<f64>() / losses.len() as f64
}
