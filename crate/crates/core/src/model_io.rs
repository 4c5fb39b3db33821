//! Versioned on-disk envelope for trained classifiers. Every artifact
//! records the format version, the classifier kind, the task it was
//! trained for, and the preprocessing transform, so a saved model can be
//! applied to raw records without any out-of-band knowledge.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{DecisionTree, RslKnnModel};
use crate::dataset::{FeatureVector, Preprocess};
use crate::error::{Error, Result};
use crate::nn::CnnModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskLabel {
    Binary,
    Multiclass,
}

impl TaskLabel {
    pub fn n_classes(self) -> usize {
        match self {
            TaskLabel::Binary => 2,
            TaskLabel::Multiclass => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Cnn(CnnModel),
    DecisionTree(DecisionTree),
    RslKnn(RslKnnModel),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Cnn(_) => "cnn",
            TrainedModel::DecisionTree(_) => "decision_tree",
            TrainedModel::RslKnn(_) => "rsl_knn",
        }
    }

    /// Class index for an already-preprocessed feature vector.
    pub fn predict_label(&self, features: &FeatureVector) -> Result<usize> {
        match self {
            TrainedModel::Cnn(m) => m.predict_label(features),
            TrainedModel::DecisionTree(m) => m.predict(features),
            TrainedModel::RslKnn(m) => m.predict(features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub version: u32,
    #[serde(flatten)]
    pub model: TrainedModel,
    pub task: TaskLabel,
    pub preprocess: Preprocess,
}

impl ModelEnvelope {
    pub fn new(model: TrainedModel, task: TaskLabel, preprocess: Preprocess) -> Self {
        ModelEnvelope { version: MODEL_FORMAT_VERSION, model, task, preprocess }
    }

    /// Full path from raw 27-feature record to class index.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<usize> {
        let features = self.preprocess.apply(raw)?;
        self.model.predict_label(&features)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let envelope: ModelEnvelope = serde_json::from_str(json)
            .map_err(|e| Error::Model(format!("malformed model file: {e}")))?;
        if envelope.version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                envelope.version
            )));
        }
        Ok(envelope)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = self.to_json()?;
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path)?;
        Self::from_json(&json)
    }
}
