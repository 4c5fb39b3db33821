//! Shared fixtures for simulation-layer tests: a one-feature stand-in
//! classifier (readings ≤ 0.5 are normal, above is an attack) wrapped in a
//! ready-to-run two-switch network.

use crate::baselines::{dt_fit, DtConfig};
use crate::dataset::{FeatureVector, NormalizationParams, Preprocess};
use crate::model_io::{ModelEnvelope, TaskLabel, TrainedModel};
use crate::sim::flow::Payload;
use crate::sim::simulation::Simulation;
use crate::sim::topology::TopologySpec;

pub(crate) fn tiny_ids() -> ModelEnvelope {
    let features: Vec<FeatureVector> =
        [0.1, 0.2, 0.8, 0.9].iter().map(|&x| FeatureVector(vec![x])).collect();
    let labels = vec![0, 0, 1, 1];
    let tree = dt_fit(&features, &labels, 2, DtConfig::default()).unwrap();
    ModelEnvelope::new(
        TrainedModel::DecisionTree(tree),
        TaskLabel::Binary,
        Preprocess {
            kept_indices: vec![0],
            norm: NormalizationParams { mins: vec![0.0], maxs: vec![1.0] },
        },
    )
}

pub(crate) fn sim_with_ids() -> Simulation {
    let mut sim = Simulation::new(&TopologySpec::default_two_switch()).unwrap();
    sim.set_ids(tiny_ids());
    sim
}

pub(crate) fn normal_payload() -> Payload {
    Payload::Reading(vec![0.2])
}

pub(crate) fn attack_payload() -> Payload {
    Payload::Reading(vec![0.9])
}
