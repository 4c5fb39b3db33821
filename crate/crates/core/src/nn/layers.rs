//! Forward and backward passes for the network's building blocks: valid 1-D
//! convolution (stride 1), max/average pooling (stride = window, remainder
//! dropped), dense layers, and the activation functions.

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Valid convolution: out[f, i] = bias[f] + Σ_{c,k} input[c, i+k] · w[f, c, k].
/// Input is [channels, length], kernels [filters, channels, k], bias [filters].
pub fn conv1d_forward(input: &Tensor, kernels: &Tensor, biases: &Tensor) -> Result<Tensor> {
    let [channels, length] = dims2(input, "conv input")?;
    let [filters, k_channels, k] = dims3(kernels, "conv kernels")?;
    if k_channels != channels {
        return Err(Error::Shape(format!(
            "conv: input has {channels} channels, kernels expect {k_channels}"
        )));
    }
    if biases.shape() != [filters] {
        return Err(Error::Shape(format!(
            "conv: bias shape {:?} does not match {filters} filters",
            biases.shape()
        )));
    }
    if length < k {
        return Err(Error::Shape(format!(
            "conv: input length {length} shorter than kernel {k}"
        )));
    }
    let out_len = length - k + 1;
    let mut out = Tensor::zeros(&[filters, out_len]);
    for f in 0..filters {
        let bias = biases.values()[f];
        for i in 0..out_len {
            let mut acc = bias;
            for c in 0..channels {
                for kk in 0..k {
                    acc += input.at2(c, i + kk) * kernels.at3(f, c, kk);
                }
            }
            let idx = out.idx2(f, i);
            out.values_mut()[idx] = acc;
        }
    }
    Ok(out)
}

/// Gradients of the convolution: returns (d_input, d_kernels, d_biases).
pub fn conv1d_backward(
    input: &Tensor,
    kernels: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let [channels, length] = dims2(input, "conv input")?;
    let [filters, _, k] = dims3(kernels, "conv kernels")?;
    let out_len = length - k + 1;
    if grad_out.shape() != [filters, out_len] {
        return Err(Error::Shape(format!(
            "conv backward: upstream gradient shape {:?}, expected [{filters}, {out_len}]",
            grad_out.shape()
        )));
    }
    let mut d_input = Tensor::zeros(&[channels, length]);
    let mut d_kernels = Tensor::zeros(kernels.shape());
    let mut d_biases = Tensor::zeros(&[filters]);
    for f in 0..filters {
        for i in 0..out_len {
            let g = grad_out.at2(f, i);
            d_biases.values_mut()[f] += g;
            for c in 0..channels {
                for kk in 0..k {
                    let wi = d_kernels.idx3(f, c, kk);
                    d_kernels.values_mut()[wi] += g * input.at2(c, i + kk);
                    let ii = d_input.idx2(c, i + kk);
                    d_input.values_mut()[ii] += g * kernels.at3(f, c, kk);
                }
            }
        }
    }
    Ok((d_input, d_kernels, d_biases))
}

/// Max pooling with stride = window; any trailing remainder is dropped.
/// Also returns, per output cell, the flattened input index of its maximum
/// (first occurrence on ties) for the backward pass.
pub fn maxpool1d_forward(input: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>)> {
    let [channels, length] = dims2(input, "pool input")?;
    check_pool(length, pool)?;
    let out_len = length / pool;
    let mut out = Tensor::zeros(&[channels, out_len]);
    let mut argmax = vec![0usize; channels * out_len];
    for c in 0..channels {
        for i in 0..out_len {
            let start = i * pool;
            let mut best = input.at2(c, start);
            let mut best_idx = input.idx2(c, start);
            for off in 1..pool {
                let v = input.at2(c, start + off);
                if v > best {
                    best = v;
                    best_idx = input.idx2(c, start + off);
                }
            }
            let oi = out.idx2(c, i);
            out.values_mut()[oi] = best;
            argmax[oi] = best_idx;
        }
    }
    Ok((out, argmax))
}

/// Routes each upstream gradient to the input element that won its window.
pub fn maxpool1d_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Tensor {
    let mut d_input = Tensor::zeros(input_shape);
    for (oi, &src) in argmax.iter().enumerate() {
        d_input.values_mut()[src] += grad_out.values()[oi];
    }
    d_input
}

/// Average pooling with stride = window; any trailing remainder is dropped.
pub fn avgpool1d_forward(input: &Tensor, pool: usize) -> Result<Tensor> {
    let [channels, length] = dims2(input, "pool input")?;
    check_pool(length, pool)?;
    let out_len = length / pool;
    let mut out = Tensor::zeros(&[channels, out_len]);
    for c in 0..channels {
        for i in 0..out_len {
            let mut acc = 0.0;
            for off in 0..pool {
                acc += input.at2(c, i * pool + off);
            }
            let oi = out.idx2(c, i);
            out.values_mut()[oi] = acc / pool as f64;
        }
    }
    Ok(out)
}

/// Spreads each upstream gradient evenly over its window; dropped remainder
/// positions receive zero gradient.
pub fn avgpool1d_backward(grad_out: &Tensor, pool: usize, input_shape: &[usize]) -> Tensor {
    let mut d_input = Tensor::zeros(input_shape);
    let channels = input_shape[0];
    let out_len = grad_out.shape()[1];
    for c in 0..channels {
        for i in 0..out_len {
            let g = grad_out.at2(c, i) / pool as f64;
            for off in 0..pool {
                let ii = d_input.idx2(c, i * pool + off);
                d_input.values_mut()[ii] += g;
            }
        }
    }
    d_input
}

/// Fully connected layer: out[o] = bias[o] + Σ_i weights[o, i] · input[i].
/// Input is a flat [n] tensor, weights [out, n], bias [out].
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let [out_dim, in_dim] = dims2(weights, "dense weights")?;
    if input.shape() != [in_dim] {
        return Err(Error::Shape(format!(
            "dense: input shape {:?}, weights expect [{in_dim}]",
            input.shape()
        )));
    }
    if bias.shape() != [out_dim] {
        return Err(Error::Shape(format!(
            "dense: bias shape {:?} does not match {out_dim} outputs",
            bias.shape()
        )));
    }
    let mut out = Tensor::zeros(&[out_dim]);
    for o in 0..out_dim {
        let mut acc = bias.values()[o];
        for i in 0..in_dim {
            acc += weights.at2(o, i) * input.values()[i];
        }
        out.values_mut()[o] = acc;
    }
    Ok(out)
}

/// Gradients of the dense layer: returns (d_input, d_weights, d_bias).
pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let [out_dim, in_dim] = dims2(weights, "dense weights")?;
    if grad_out.shape() != [out_dim] {
        return Err(Error::Shape(format!(
            "dense backward: upstream gradient shape {:?}, expected [{out_dim}]",
            grad_out.shape()
        )));
    }
    let mut d_input = Tensor::zeros(&[in_dim]);
    let mut d_weights = Tensor::zeros(&[out_dim, in_dim]);
    let d_bias = grad_out.clone();
    for o in 0..out_dim {
        let g = grad_out.values()[o];
        for i in 0..in_dim {
            let wi = d_weights.idx2(o, i);
            d_weights.values_mut()[wi] += g * input.values()[i];
            d_input.values_mut()[i] += g * weights.at2(o, i);
        }
    }
    Ok((d_input, d_weights, d_bias))
}

/// Elementwise max(0, x).
pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Gradient mask of ReLU: passes upstream gradient where the pre-activation
/// was strictly positive.
pub fn relu_backward(pre_activation: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut d = grad_out.clone();
    for (g, &pre) in d.values_mut().iter_mut().zip(pre_activation.values()) {
        if pre <= 0.0 {
            *g = 0.0;
        }
    }
    d
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stabilized softmax (max subtraction before exponentiation).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_pool(length: usize, pool: usize) -> Result<()> {
    if pool == 0 {
        return Err(Error::Shape("pool window must be positive".into()));
    }
    if length < pool {
        return Err(Error::Shape(format!(
            "pool window {pool} larger than input length {length}"
        )));
    }
    Ok(())
}

fn dims2(t: &Tensor, what: &str) -> Result<[usize; 2]> {
    match t.shape() {
        [a, b] => Ok([*a, *b]),
        other => Err(Error::Shape(format!("{what}: expected 2-D shape, got {other:?}"))),
    }
}

fn dims3(t: &Tensor, what: &str) -> Result<[usize; 3]> {
    match t.shape() {
        [a, b, c] => Ok([*a, *b, *c]),
        other => Err(Error::Shape(format!("{what}: expected 3-D shape, got {other:?}"))),
    }
}
