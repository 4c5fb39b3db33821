//! Stochastic gradient descent with classical momentum:
//! v ← momentum·v − lr·g, then w ← w + v.

use crate::error::{Error, Result};

use super::model::{CnnModel, Gradients};
use super::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    velocities: Vec<Tensor>,
}

impl SgdMomentum {
    /// Zero-velocity state shaped like the model's parameters.
    pub fn new(learning_rate: f64, momentum: f64, model: &CnnModel) -> SgdMomentum {
        SgdMomentum {
            learning_rate,
            momentum,
            velocities: model.params().iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    /// Applies one update to every parameter tensor in place.
    pub fn step(&mut self, model: &mut CnnModel, grads: &Gradients) -> Result<()> {
        let params = model.params_mut();
        let grad_tensors = grads.tensors();
        for ((param, grad), velocity) in
            params.into_iter().zip(grad_tensors).zip(&mut self.velocities)
        {
            if velocity.shape() != param.shape() || grad.shape() != param.shape() {
                return Err(Error::Shape(format!(
                    "optimizer state {:?} does not match parameter {:?} / gradient {:?}",
                    velocity.shape(),
                    param.shape(),
                    grad.shape()
                )));
            }
            for ((w, &g), v) in param
                .values_mut()
                .iter_mut()
                .zip(grad.values())
                .zip(velocity.values_mut())
            {
                *v = self.momentum * *v - self.learning_rate * g;
                *w += *v;
            }
        }
        Ok(())
    }

    /// Current velocity tensors (read-only; used by tests and diagnostics).
    pub fn velocities(&self) -> &[Tensor] {
        &self.velocities
    }
}
