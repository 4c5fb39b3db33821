//! Run configuration: a JSON file naming exactly one data source plus
//! optional model/baseline settings. The seed is mandatory — every command
//! is reproducible from config + seed alone.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use flowsentry_core::baselines::{DtConfig, KnnConfig};
use flowsentry_core::dataset::{
    load_records, synthesize_dataset, DataFormat, RawRecord, SynthConfig,
};
use flowsentry_core::error::{Error, Result};
use flowsentry_core::nn::ModelConfig;

/// Where the records come from. The enum makes "exactly one source" a
/// parse-time guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf },
    Arff { path: PathBuf },
    Synthetic(SynthConfig),
}

/// Optional overrides on top of the built-in model defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub conv1_filters: Option<usize>,
    pub conv2_filters: Option<usize>,
    pub fc1_units: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
}

impl ModelOverrides {
    pub fn apply(&self, mut base: ModelConfig) -> ModelConfig {
        if let Some(v) = self.conv1_filters {
            base.conv1_filters = v;
        }
        if let Some(v) = self.conv2_filters {
            base.conv2_filters = v;
        }
        if let Some(v) = self.fc1_units {
            base.fc1_units = v;
        }
        if let Some(v) = self.learning_rate {
            base.learning_rate = v;
        }
        if let Some(v) = self.momentum {
            base.momentum = v;
        }
        if let Some(v) = self.batch_size {
            base.batch_size = v;
        }
        if let Some(v) = self.epochs {
            base.epochs = v;
        }
        base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Drives every random choice: splits, weight init, subspace sampling,
    /// payload shuffling.
    pub seed: u64,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub tree: Option<DtConfig>,
    #[serde(default)]
    pub knn: Option<KnnConfig>,
    /// Bundled scenario name or a script path; `--scenario` overrides it.
    #[serde(default)]
    pub scenario: Option<String>,
    /// Default output directory; `--out` overrides it.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::data(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("invalid config {}: {e}", path.display())))
    }

    /// Loads or synthesizes the raw records this run works on.
    pub fn resolve_records(&self) -> Result<Vec<RawRecord>> {
        match &self.data {
            DataSource::Csv { path } => load_records(path, DataFormat::Csv),
            DataSource::Arff { path } => load_records(path, DataFormat::Arff),
            DataSource::Synthetic(spec) => synthesize_dataset(spec, self.seed),
        }
    }

    pub fn tree_config(&self) -> DtConfig {
        self.tree.clone().unwrap_or_default()
    }

    pub fn knn_config(&self) -> KnnConfig {
        self.knn.clone().unwrap_or_default()
    }
}
