use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Per-feature batch normalization with learnable scale and shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormState {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

/// Intermediates kept by [`batchnorm_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: DenseMatrix,
    pub inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    /// Biased batch variance; empty in inference mode.
    pub batch_var: Vec<f64>,
    pub training: bool,
}

impl BatchNormState {
    /// Identity transform: `gamma = 1`, `beta = 0`, running stats `(0, 1)`.
    pub fn new(features: usize) -> Self {
        Self::with_params(features, DEFAULT_MOMENTUM, DEFAULT_EPSILON)
    }

    pub fn with_params(features: usize, momentum: f64, epsilon: f64) -> Self {
        Self {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum,
            epsilon,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    /// Exponential moving average of the batch statistics held in `cache`.
    ///
    /// The running variance uses the unbiased batch estimate.
    pub fn update_running_stats(&mut self, cache: &BatchNormCache) {
        if !cache.training {
            return;
        }
        let n = cache.normalized.rows() as f64;
        let correction = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        let m = self.momentum;
        for j in 0..self.features() {
            self.running_mean[j] = (1.0 - m) * self.running_mean[j] + m * cache.batch_mean[j];
            self.running_var[j] =
                (1.0 - m) * self.running_var[j] + m * cache.batch_var[j] * correction;
        }
    }
}

pub fn batchnorm_forward(
    state: &BatchNormState,
    x: &DenseMatrix,
    training: bool,
) -> Result<(DenseMatrix, BatchNormCache)> {
    let (n, f) = x.shape();
    if f != state.features() {
        return Err(Error::shape(
            "batchnorm_forward",
            x.shape(),
            (n, state.features()),
        ));
    }
    let (mean, var) = if training {
        if n < 2 {
            return Err(Error::Parameter(format!(
                "batch normalization in training mode needs a batch of at least 2, got {n}"
            )));
        }
        let mut mean = vec![0.0; f];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; f];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s /= n as f64);
        (mean, var)
    } else {
        (state.running_mean.clone(), state.running_var.clone())
    };
    let inv_std: Vec<f64> = var
        .iter()
        .map(|v| 1.0 / (v + state.epsilon).sqrt())
        .collect();

    let mut normalized = DenseMatrix::zeros(n, f);
    let mut out = DenseMatrix::zeros(n, f);
    for i in 0..n {
        let xr = x.row(i);
        for j in 0..f {
            let xh = (xr[j] - mean[j]) * inv_std[j];
            normalized[(i, j)] = xh;
            out[(i, j)] = state.gamma[j] * xh + state.beta[j];
        }
    }
    let cache = BatchNormCache {
        normalized,
        inv_std,
        batch_mean: if training { mean } else { Vec::new() },
        batch_var: if training { var } else { Vec::new() },
        training,
    };
    Ok((out, cache))
}

/// Returns `(grad_input, grad_gamma, grad_beta)`.
pub fn batchnorm_backward(
    state: &BatchNormState,
    cache: &BatchNormCache,
    grad_output: &DenseMatrix,
) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
    if grad_output.shape() != cache.normalized.shape() {
        return Err(Error::shape(
            "batchnorm_backward",
            grad_output.shape(),
            cache.normalized.shape(),
        ));
    }
    let (n, f) = grad_output.shape();
    let xh = &cache.normalized;
    let mut grad_gamma = vec![0.0; f];
    let mut grad_beta = vec![0.0; f];
    for i in 0..n {
        for j in 0..f {
            let g = grad_output[(i, j)];
            grad_gamma[j] += g * xh[(i, j)];
            grad_beta[j] += g;
        }
    }

    let mut grad_input = DenseMatrix::zeros(n, f);
    if cache.training {
        // dxhat = g * gamma; dx = inv_std / n * (n dxhat - sum dxhat - xhat sum(dxhat xhat))
        let nf = n as f64;
        for j in 0..f {
            let gamma = state.gamma[j];
            let sum_dxh = gamma * grad_beta[j];
            let sum_dxh_xh = gamma * grad_gamma[j];
            let k = cache.inv_std[j] / nf;
            for i in 0..n {
                let dxh = grad_output[(i, j)] * gamma;
                grad_input[(i, j)] = k * (nf * dxh - sum_dxh - xh[(i, j)] * sum_dxh_xh);
            }
        }
    } else {
        for i in 0..n {
            for j in 0..f {
                grad_input[(i, j)] = grad_output[(i, j)] * state.gamma[j] * cache.inv_std[j];
            }
        }
    }
    Ok((grad_input, grad_gamma, grad_beta))
}
