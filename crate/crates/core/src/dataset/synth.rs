//! Schema-compatible synthetic substitute for the gas-pipeline corpus.
//!
//! Each source class is a Gaussian cluster over the 27 raw features, with a
//! configurable subset of features held constant so the constant-feature drop
//! step has something to remove.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ClassLabel8, RawRecord, RAW_FEATURE_COUNT};

/// Default indices of features that never vary (9 of 27, so 18 survive).
pub const DEFAULT_CONSTANT_INDICES: [usize; 9] = [1, 4, 7, 10, 13, 16, 19, 22, 25];

/// Per-class sample counts and cluster shape for `synthesize_dataset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Samples to draw per source class. Entries must be positive; omit a
    /// class instead of setting it to zero.
    pub class_counts: BTreeMap<ClassLabel8, usize>,
    /// Feature indices pinned to a fixed value across every record.
    #[serde(default = "default_constant_indices")]
    pub constant_indices: Vec<usize>,
    /// Standard deviation of each class cluster.
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_constant_indices() -> Vec<usize> {
    DEFAULT_CONSTANT_INDICES.to_vec()
}

fn default_noise() -> f64 {
    0.3
}

impl SynthConfig {
    pub fn new(class_counts: BTreeMap<ClassLabel8, usize>) -> Self {
        SynthConfig {
            class_counts,
            constant_indices: default_constant_indices(),
            noise: default_noise(),
        }
    }

    /// Builds per-class counts from task-group totals, spreading the
    /// injection total across its five subclasses as evenly as possible.
    pub fn grouped(normal: usize, injection: usize, dos: usize, recon: usize) -> Self {
        let mut counts = BTreeMap::new();
        if normal > 0 {
            counts.insert(ClassLabel8::Normal, normal);
        }
        let subclasses = [
            ClassLabel8::Nmri,
            ClassLabel8::Cmri,
            ClassLabel8::Msci,
            ClassLabel8::Mpci,
            ClassLabel8::Mfci,
        ];
        let base = injection / subclasses.len();
        let extra = injection % subclasses.len();
        for (i, class) in subclasses.into_iter().enumerate() {
            let n = base + usize::from(i < extra);
            if n > 0 {
                counts.insert(class, n);
            }
        }
        if dos > 0 {
            counts.insert(ClassLabel8::Dos, dos);
        }
        if recon > 0 {
            counts.insert(ClassLabel8::Recon, recon);
        }
        SynthConfig::new(counts)
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn total(&self) -> usize {
        self.class_counts.values().sum()
    }
}

/// Cluster center for a class on one varying feature. Integer-grid centers
/// keep distinct classes well separated relative to the default noise.
fn class_center(class: ClassLabel8, feature: usize) -> f64 {
    (((class.id() + 1) * (feature + 3)) % 8) as f64
}

/// Fixed value for a pinned feature.
fn constant_value(feature: usize) -> f64 {
    1.0 + feature as f64 * 0.5
}

/// Draws a deterministic dataset of Gaussian class clusters.
pub fn synthesize_dataset(config: &SynthConfig, seed: u64) -> Result<Vec<RawRecord>> {
    if config.class_counts.is_empty() {
        return Err(Error::data("synthetic config lists no classes"));
    }
    if let Some((class, _)) = config.class_counts.iter().find(|(_, &n)| n == 0) {
        return Err(Error::data(format!(
            "synthetic config gives class {class:?} a zero count; omit the class instead"
        )));
    }
    if let Some(&bad) = config
        .constant_indices
        .iter()
        .find(|&&i| i >= RAW_FEATURE_COUNT)
    {
        return Err(Error::data(format!(
            "constant feature index {bad} outside 0..{RAW_FEATURE_COUNT}"
        )));
    }
    if !(config.noise.is_finite() && config.noise > 0.0) {
        return Err(Error::data("synthetic noise must be positive and finite"));
    }

    let mut is_constant = [false; RAW_FEATURE_COUNT];
    for &i in &config.constant_indices {
        is_constant[i] = true;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(config.total());
    for (&class, &count) in &config.class_counts {
        for _ in 0..count {
            let mut features = Vec::with_capacity(RAW_FEATURE_COUNT);
            for j in 0..RAW_FEATURE_COUNT {
                if is_constant[j] {
                    features.push(constant_value(j));
                } else {
                    let dist = Normal::new(class_center(class, j), config.noise)
                        .expect("noise validated above");
                    features.push(dist.sample(&mut rng));
                }
            }
            records.push(RawRecord { features, label8: class });
        }
    }
    Ok(records)
}
