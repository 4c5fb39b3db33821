//! The payload classifier: Conv1D→ReLU→MaxPool→Conv1D→ReLU→AvgPool→Flatten→
//! Dense→ReLU→Dense with a sigmoid head for two-way detection or a softmax
//! head for the four traffic classes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};

use super::layers::{
    avgpool1d_backward, avgpool1d_forward, conv1d_backward, conv1d_forward, dense_backward,
    dense_forward, maxpool1d_backward, maxpool1d_forward, relu, relu_backward, sigmoid, softmax,
};
use super::tensor::Tensor;

/// Which head the network carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// One sigmoid unit, threshold 0.5.
    Binary,
    /// Four softmax units, argmax.
    Multiclass,
}

impl TaskKind {
    pub fn output_units(self) -> usize {
        match self {
            TaskKind::Binary => 1,
            TaskKind::Multiclass => 4,
        }
    }
}

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    pub fc1_units: usize,
    pub output_units: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults for the two-way detector.
    pub fn default_binary(seed: u64) -> Self {
        ModelConfig {
            conv1_filters: 16,
            conv2_filters: 32,
            kernel_size: 3,
            pool_size: 2,
            fc1_units: 64,
            output_units: 1,
            learning_rate: 0.01,
            momentum: 0.8,
            batch_size: 100,
            epochs: 30,
            seed,
        }
    }

    /// Defaults for the four-class classifier.
    pub fn default_multiclass(seed: u64) -> Self {
        ModelConfig { output_units: 4, ..Self::default_binary(seed) }
    }

    pub fn task(&self) -> Result<TaskKind> {
        match self.output_units {
            1 => Ok(TaskKind::Binary),
            4 => Ok(TaskKind::Multiclass),
            other => Err(Error::Model(format!(
                "output_units must be 1 (binary) or 4 (multiclass), got {other}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("conv1_filters", self.conv1_filters),
            ("conv2_filters", self.conv2_filters),
            ("kernel_size", self.kernel_size),
            ("pool_size", self.pool_size),
            ("fc1_units", self.fc1_units),
            ("output_units", self.output_units),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        for (name, v) in positives {
            if v == 0 {
                return Err(Error::Model(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Model("learning_rate must be positive".into()));
        }
        if !(self.momentum.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::Model("momentum must lie in [0, 1)".into()));
        }
        self.task()?;
        Ok(())
    }
}

/// Training target for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// 0 = normal, 1 = attack.
    Binary(u8),
    /// Class index 0..4.
    Class(usize),
}

/// Intermediate shapes of the layer pipeline for a given input length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapePlan {
    pub input_len: usize,
    pub conv1_len: usize,
    pub pool1_len: usize,
    pub conv2_len: usize,
    pub pool2_len: usize,
    pub flat_len: usize,
}

impl ShapePlan {
    pub fn for_config(config: &ModelConfig, input_len: usize) -> Result<ShapePlan> {
        let k = config.kernel_size;
        let p = config.pool_size;
        if input_len < k {
            return Err(Error::Shape(format!(
                "input length {input_len} shorter than kernel {k}"
            )));
        }
        let conv1_len = input_len - k + 1;
        let pool1_len = conv1_len / p;
        if pool1_len == 0 {
            return Err(Error::Shape("first pooling stage produces no output".into()));
        }
        if pool1_len < k {
            return Err(Error::Shape(format!(
                "second convolution needs length ≥ {k}, has {pool1_len}"
            )));
        }
        let conv2_len = pool1_len - k + 1;
        let pool2_len = conv2_len / p;
        if pool2_len == 0 {
            return Err(Error::Shape("second pooling stage produces no output".into()));
        }
        Ok(ShapePlan {
            input_len,
            conv1_len,
            pool1_len,
            conv2_len,
            pool2_len,
            flat_len: config.conv2_filters * pool2_len,
        })
    }
}

/// Trained (or training) network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub config: ModelConfig,
    pub input_len: usize,
    pub conv1_w: Tensor,
    pub conv1_b: Tensor,
    pub conv2_w: Tensor,
    pub conv2_b: Tensor,
    pub fc1_w: Tensor,
    pub fc1_b: Tensor,
    pub fc2_w: Tensor,
    pub fc2_b: Tensor,
}

/// Cached activations of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Tensor,
    pub conv1_pre: Tensor,
    conv1_act: Tensor,
    pool1_out: Tensor,
    pool1_argmax: Vec<usize>,
    pub conv2_pre: Tensor,
    conv2_act: Tensor,
    pool2_out: Tensor,
    flat: Tensor,
    pub fc1_pre: Tensor,
    fc1_act: Tensor,
    pub logits: Vec<f64>,
    /// Binary: [p]; multiclass: the softmax distribution.
    pub probs: Vec<f64>,
}

/// One gradient tensor per parameter tensor, in model field order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv1_w: Tensor,
    pub conv1_b: Tensor,
    pub conv2_w: Tensor,
    pub conv2_b: Tensor,
    pub fc1_w: Tensor,
    pub fc1_b: Tensor,
    pub fc2_w: Tensor,
    pub fc2_b: Tensor,
}

impl Gradients {
    pub fn zeros_like(model: &CnnModel) -> Gradients {
        Gradients {
            conv1_w: Tensor::zeros(model.conv1_w.shape()),
            conv1_b: Tensor::zeros(model.conv1_b.shape()),
            conv2_w: Tensor::zeros(model.conv2_w.shape()),
            conv2_b: Tensor::zeros(model.conv2_b.shape()),
            fc1_w: Tensor::zeros(model.fc1_w.shape()),
            fc1_b: Tensor::zeros(model.fc1_b.shape()),
            fc2_w: Tensor::zeros(model.fc2_w.shape()),
            fc2_b: Tensor::zeros(model.fc2_b.shape()),
        }
    }

    pub fn tensors(&self) -> [&Tensor; 8] {
        [
            &self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b,
            &self.fc1_w, &self.fc1_b, &self.fc2_w, &self.fc2_b,
        ]
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        self.conv1_w.add_assign(&other.conv1_w)?;
        self.conv1_b.add_assign(&other.conv1_b)?;
        self.conv2_w.add_assign(&other.conv2_w)?;
        self.conv2_b.add_assign(&other.conv2_b)?;
        self.fc1_w.add_assign(&other.fc1_w)?;
        self.fc1_b.add_assign(&other.fc1_b)?;
        self.fc2_w.add_assign(&other.fc2_w)?;
        self.fc2_b.add_assign(&other.fc2_b)?;
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.conv1_w.scale(factor);
        self.conv1_b.scale(factor);
        self.conv2_w.scale(factor);
        self.conv2_b.scale(factor);
        self.fc1_w.scale(factor);
        self.fc1_b.scale(factor);
        self.fc2_w.scale(factor);
        self.fc2_b.scale(factor);
    }
}

/// Uniform init over ±sqrt(6 / fan_in), the fan-in scaling suited to ReLU.
fn he_uniform(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let limit = (6.0 / fan_in as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.values_mut() {
        *v = rng.random_range(-limit..limit);
    }
    t
}

/// Uniform init over ±sqrt(6 / (fan_in + fan_out)) for the linear output head.
fn xavier_uniform(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.values_mut() {
        *v = rng.random_range(-limit..limit);
    }
    t
}

impl CnnModel {
    /// Fresh model with seeded weight initialization (seed from the config).
    pub fn init(config: ModelConfig, input_len: usize) -> Result<CnnModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::init_with_rng(config, input_len, &mut rng)
    }

    /// Fresh model drawing its weights from a caller-supplied RNG stream.
    pub fn init_with_rng(
        config: ModelConfig,
        input_len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<CnnModel> {
        config.validate()?;
        let plan = ShapePlan::for_config(&config, input_len)?;
        let k = config.kernel_size;
        let (f1, f2) = (config.conv1_filters, config.conv2_filters);
        let conv1_w = he_uniform(rng, &[f1, 1, k], k);
        let conv1_b = Tensor::zeros(&[f1]);
        let conv2_w = he_uniform(rng, &[f2, f1, k], f1 * k);
        let conv2_b = Tensor::zeros(&[f2]);
        let fc1_w = he_uniform(rng, &[config.fc1_units, plan.flat_len], plan.flat_len);
        let fc1_b = Tensor::zeros(&[config.fc1_units]);
        let fc2_w = xavier_uniform(
            rng,
            &[config.output_units, config.fc1_units],
            config.fc1_units,
            config.output_units,
        );
        let fc2_b = Tensor::zeros(&[config.output_units]);
        Ok(CnnModel {
            config,
            input_len,
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            fc1_w,
            fc1_b,
            fc2_w,
            fc2_b,
        })
    }

    pub fn task(&self) -> TaskKind {
        self.config.task().expect("validated at init")
    }

    pub fn shape_plan(&self) -> ShapePlan {
        ShapePlan::for_config(&self.config, self.input_len).expect("validated at init")
    }

    /// All parameter tensors in a fixed order matching `Gradients::tensors`.
    pub fn params(&self) -> [&Tensor; 8] {
        [
            &self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b,
            &self.fc1_w, &self.fc1_b, &self.fc2_w, &self.fc2_b,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 8] {
        [
            &mut self.conv1_w, &mut self.conv1_b, &mut self.conv2_w, &mut self.conv2_b,
            &mut self.fc1_w, &mut self.fc1_b, &mut self.fc2_w, &mut self.fc2_b,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Full forward pass, keeping every intermediate needed by `backward`.
    pub fn forward(&self, input: &FeatureVector) -> Result<ForwardCache> {
        if input.len() != self.input_len {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                input.len(),
                self.input_len
            )));
        }
        let input = Tensor::from_vec(vec![1, self.input_len], input.0.clone())?;
        let pool = self.config.pool_size;

        let conv1_pre = conv1d_forward(&input, &self.conv1_w, &self.conv1_b)?;
        let conv1_act = relu(&conv1_pre);
        let (pool1_out, pool1_argmax) = maxpool1d_forward(&conv1_act, pool)?;
        let conv2_pre = conv1d_forward(&pool1_out, &self.conv2_w, &self.conv2_b)?;
        let conv2_act = relu(&conv2_pre);
        let pool2_out = avgpool1d_forward(&conv2_act, pool)?;
        let flat = Tensor::from_vec_unchecked(vec![pool2_out.len()], pool2_out.values().to_vec());
        let fc1_pre = dense_forward(&flat, &self.fc1_w, &self.fc1_b)?;
        let fc1_act = relu(&fc1_pre);
        let logits_t = dense_forward(&fc1_act, &self.fc2_w, &self.fc2_b)?;
        let logits = logits_t.values().to_vec();
        let probs = match self.task() {
            TaskKind::Binary => vec![sigmoid(logits[0])],
            TaskKind::Multiclass => softmax(&logits),
        };
        Ok(ForwardCache {
            input,
            conv1_pre,
            conv1_act,
            pool1_out,
            pool1_argmax,
            conv2_pre,
            conv2_act,
            pool2_out,
            flat,
            fc1_pre,
            fc1_act,
            logits,
            probs,
        })
    }

    /// Per-sample loss given a completed forward pass.
    pub fn loss(&self, cache: &ForwardCache, target: Target) -> Result<f64> {
        match (self.task(), target) {
            (TaskKind::Binary, Target::Binary(t)) => {
                Ok(super::loss::binary_crossentropy(cache.probs[0], t as f64))
            }
            (TaskKind::Multiclass, Target::Class(c)) => {
                if c >= cache.probs.len() {
                    return Err(Error::Model(format!("target class {c} out of range")));
                }
                Ok(super::loss::categorical_crossentropy(&cache.probs, c))
            }
            (task, target) => Err(Error::Model(format!(
                "target {target:?} does not fit {task:?} head"
            ))),
        }
    }

    /// Backpropagation through the cached activations of one sample.
    ///
    /// Both heads share the cross-entropy shortcut: the gradient at the
    /// logits is prediction − target.
    pub fn backward(&self, cache: &ForwardCache, target: Target) -> Result<Gradients> {
        let mut d_logits = vec![0.0; self.config.output_units];
        match (self.task(), target) {
            (TaskKind::Binary, Target::Binary(t)) => {
                d_logits[0] = cache.probs[0] - t as f64;
            }
            (TaskKind::Multiclass, Target::Class(c)) => {
                if c >= cache.probs.len() {
                    return Err(Error::Model(format!("target class {c} out of range")));
                }
                for (o, g) in d_logits.iter_mut().enumerate() {
                    *g = cache.probs[o] - if o == c { 1.0 } else { 0.0 };
                }
            }
            (task, target) => {
                return Err(Error::Model(format!(
                    "target {target:?} does not fit {task:?} head"
                )))
            }
        }
        let d_logits = Tensor::from_vec_unchecked(vec![d_logits.len()], d_logits);

        let (d_fc1_act, fc2_dw, fc2_db) = dense_backward(&cache.fc1_act, &self.fc2_w, &d_logits)?;
        let d_fc1_pre = relu_backward(&cache.fc1_pre, &d_fc1_act);
        let (d_flat, fc1_dw, fc1_db) = dense_backward(&cache.flat, &self.fc1_w, &d_fc1_pre)?;
        let d_pool2 = Tensor::from_vec_unchecked(
            cache.pool2_out.shape().to_vec(),
            d_flat.values().to_vec(),
        );
        let d_conv2_act =
            avgpool1d_backward(&d_pool2, self.config.pool_size, cache.conv2_act.shape());
        let d_conv2_pre = relu_backward(&cache.conv2_pre, &d_conv2_act);
        let (d_pool1, conv2_dw, conv2_db) =
            conv1d_backward(&cache.pool1_out, &self.conv2_w, &d_conv2_pre)?;
        let d_conv1_act =
            maxpool1d_backward(&d_pool1, &cache.pool1_argmax, cache.conv1_act.shape());
        let d_conv1_pre = relu_backward(&cache.conv1_pre, &d_conv1_act);
        let (_, conv1_dw, conv1_db) =
            conv1d_backward(&cache.input, &self.conv1_w, &d_conv1_pre)?;

        Ok(Gradients {
            conv1_w: conv1_dw,
            conv1_b: conv1_db,
            conv2_w: conv2_dw,
            conv2_b: conv2_db,
            fc1_w: fc1_dw,
            fc1_b: fc1_db,
            fc2_w: fc2_dw,
            fc2_b: fc2_db,
        })
    }

    /// Mean loss and mean gradients over a batch.
    pub fn backward_batch(
        &self,
        batch: &[(&FeatureVector, Target)],
    ) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Training("empty batch".into()));
        }
        let mut total = Gradients::zeros_like(self);
        let mut loss_sum = 0.0;
        for (features, target) in batch {
            let cache = self.forward(features)?;
            let sample_loss = self.loss(&cache, *target)?;
            if !sample_loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss {sample_loss}"
                )));
            }
            loss_sum += sample_loss;
            total.add_assign(&self.backward(&cache, *target)?)?;
        }
        let n = batch.len() as f64;
        total.scale(1.0 / n);
        Ok((loss_sum / n, total))
    }

    /// Two-way verdict: (label, probability of attack).
    pub fn predict_binary(&self, input: &FeatureVector) -> Result<(u8, f64)> {
        if self.task() != TaskKind::Binary {
            return Err(Error::Model("model head is not binary".into()));
        }
        let cache = self.forward(input)?;
        let p = cache.probs[0];
        Ok((u8::from(p >= 0.5), p))
    }

    /// Four-way verdict: (argmax class index, class distribution).
    pub fn predict_class(&self, input: &FeatureVector) -> Result<(usize, Vec<f64>)> {
        if self.task() != TaskKind::Multiclass {
            return Err(Error::Model("model head is not multiclass".into()));
        }
        let cache = self.forward(input)?;
        let best = cache
            .probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
            .map(|(i, _)| i)
            .expect("non-empty distribution");
        Ok((best, cache.probs))
    }

    /// Task-agnostic predicted label index (binary: 0/1; multiclass: 0..4).
    pub fn predict_label(&self, input: &FeatureVector) -> Result<usize> {
        match self.task() {
            TaskKind::Binary => Ok(self.predict_binary(input)?.0 as usize),
            TaskKind::Multiclass => Ok(self.predict_class(input)?.0),
        }
    }
}
