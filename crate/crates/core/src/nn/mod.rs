//! From-scratch neural network stack: tensors, 1-D convolution / pooling /
//! dense layers, cross-entropy losses, SGD with momentum, the payload
//! classifier model, training loop, and evaluation metrics.

pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod train;

pub use metrics::{
    binary_class_names, confusion_matrix, evaluate, multiclass_class_names, ClassMetrics,
    MetricsReport,
};
pub use model::{CnnModel, ForwardCache, Gradients, ModelConfig, ShapePlan, Target, TaskKind};
pub use optim::SgdMomentum;
pub use tensor::Tensor;
pub use train::{dataset_loss_accuracy, train, EpochTrace};
