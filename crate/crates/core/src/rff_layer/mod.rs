//! A single random Fourier feature layer.
//!
//! The layer maps `x ∈ R^d` to `ψ(x) = √(1/D) [cos(ωx) ‖ sin(ωx)] ∈ R^{2D}`
//! with a trainable `D x d` frequency matrix `ω` and no bias. An optional
//! batch normalization over the `2D` trig features follows the map.

mod batchnorm;

use serde::{Deserialize, Serialize};

pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormState, DEFAULT_EPSILON,
    DEFAULT_MOMENTUM,
};

use crate::error::{Error, Result};
use crate::numerics::{gaussian_matrix, DenseMatrix, Rng};

/// Frequency standard deviation used to initialize `ω` (variance 0.01).
pub const DEFAULT_INIT_STDDEV: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffLayer {
    /// `D x d_in`; row `m` is the frequency `ω_m`.
    omega: DenseMatrix,
    batchnorm: Option<BatchNormState>,
}

/// Everything the backward pass needs from one forward call.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: DenseMatrix,
    /// `f = X ωᵀ`, `batch x D`.
    pub pre_activation: DenseMatrix,
    /// Raw trig features before batch normalization, `batch x 2D`.
    pub features: DenseMatrix,
    /// Layer output (equal to `features` without batch norm).
    pub output: DenseMatrix,
    pub batchnorm: Option<BatchNormCache>,
}

/// Parameter gradients of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub omega: DenseMatrix,
    pub gamma: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
}

impl LayerGrads {
    /// Same block order as [`RffLayer::params`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.omega.as_slice()];
        if let (Some(g), Some(b)) = (&self.gamma, &self.beta) {
            out.push(g);
            out.push(b);
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let Self { omega, gamma, beta } = self;
        let mut out = vec![omega.as_mut_slice()];
        if let (Some(g), Some(b)) = (gamma, beta) {
            out.push(g.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        out
    }
}

impl RffLayer {
    /// Draws `ω` with i.i.d. `N(0, stddev²)` entries.
    pub fn init(d_in: usize, features: usize, stddev: f64, rng: &mut Rng) -> Result<Self> {
        if d_in == 0 || features == 0 {
            return Err(Error::Parameter(format!(
                "layer dimensions must be positive, got d_in={d_in}, D={features}"
            )));
        }
        if !stddev.is_finite() || stddev <= 0.0 {
            return Err(Error::Parameter(format!(
                "initial frequency stddev must be positive, got {stddev}"
            )));
        }
        Ok(Self {
            omega: gaussian_matrix(features, d_in, 0.0, stddev, rng)?,
            batchnorm: None,
        })
    }

    pub fn from_omega(omega: DenseMatrix) -> Result<Self> {
        if omega.rows() == 0 || omega.cols() == 0 {
            return Err(Error::Parameter("empty frequency matrix".into()));
        }
        Ok(Self {
            omega,
            batchnorm: None,
        })
    }

    pub fn with_batchnorm(mut self, state: BatchNormState) -> Result<Self> {
        if state.features() != self.output_dim() {
            return Err(Error::Parameter(format!(
                "batch norm over {} features, layer emits {}",
                state.features(),
                self.output_dim()
            )));
        }
        self.batchnorm = Some(state);
        Ok(self)
    }

    pub fn d_in(&self) -> usize {
        self.omega.cols()
    }

    /// `D`, the number of frequencies.
    pub fn features(&self) -> usize {
        self.omega.rows()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.features()
    }

    pub fn omega(&self) -> &DenseMatrix {
        &self.omega
    }

    pub fn omega_mut(&mut self) -> &mut DenseMatrix {
        &mut self.omega
    }

    pub fn batchnorm(&self) -> Option<&BatchNormState> {
        self.batchnorm.as_ref()
    }

    pub fn batchnorm_mut(&mut self) -> Option<&mut BatchNormState> {
        self.batchnorm.as_mut()
    }

    /// The raw feature map `√(1/D)[cos f ‖ sin f]`, plus `f`.
    pub fn trig_features(&self, x: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
        if x.cols() != self.d_in() {
            return Err(Error::shape(
                "rff forward",
                x.shape(),
                (x.rows(), self.d_in()),
            ));
        }
        let pre = x.matmul_transpose(&self.omega)?;
        let d = self.features();
        let scale = (1.0 / d as f64).sqrt();
        let mut features = DenseMatrix::zeros(x.rows(), 2 * d);
        for i in 0..x.rows() {
            let f = pre.row(i);
            let out = features.row_mut(i);
            for m in 0..d {
                let (s, c) = f[m].sin_cos();
                out[m] = scale * c;
                out[m + d] = scale * s;
            }
        }
        Ok((features, pre))
    }

    /// Batch norm uses batch statistics when `training`, running statistics
    /// otherwise. Running statistics are not touched here; see
    /// [`RffLayer::update_running_stats`].
    pub fn forward(&self, x: &DenseMatrix, training: bool) -> Result<(DenseMatrix, LayerCache)> {
        let (features, pre_activation) = self.trig_features(x)?;
        let (output, bn_cache) = match &self.batchnorm {
            Some(bn) => {
                let (out, cache) = batchnorm_forward(bn, &features, training)?;
                (out, Some(cache))
            }
            None => (features.clone(), None),
        };
        let cache = LayerCache {
            input: x.clone(),
            pre_activation,
            features,
            output: output.clone(),
            batchnorm: bn_cache,
        };
        Ok((output, cache))
    }

    /// Inference-mode output without keeping intermediates.
    pub fn infer(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let (features, _) = self.trig_features(x)?;
        match &self.batchnorm {
            Some(bn) => Ok(batchnorm_forward(bn, &features, false)?.0),
            None => Ok(features),
        }
    }

    /// Trainable parameter blocks in a fixed order: `ω`, then `γ`, `β` when
    /// batch norm is enabled.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = vec![self.omega.as_slice()];
        if let Some(bn) = &self.batchnorm {
            out.push(&bn.gamma);
            out.push(&bn.beta);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let Self { omega, batchnorm } = self;
        let mut out = vec![omega.as_mut_slice()];
        if let Some(bn) = batchnorm {
            out.push(bn.gamma.as_mut_slice());
            out.push(bn.beta.as_mut_slice());
        }
        out
    }

    pub fn update_running_stats(&mut self, cache: &LayerCache) {
        if let (Some(bn), Some(c)) = (self.batchnorm.as_mut(), cache.batchnorm.as_ref()) {
            bn.update_running_stats(c);
        }
    }

    /// Gradients summed over the batch, and the gradient w.r.t. the input.
    ///
    /// For frequency `m` the cosine output `m` and sine output `m + D` share
    /// `f_m = ω_m·x`, so `∂L/∂f_m = √(1/D)(cos f_m g_{m+D} - sin f_m g_m)`.
    pub fn backward(
        &self,
        cache: &LayerCache,
        grad_output: &DenseMatrix,
    ) -> Result<(LayerGrads, DenseMatrix)> {
        let batch = cache.input.rows();
        let d = self.features();
        if grad_output.shape() != (batch, 2 * d)
            || cache.pre_activation.shape() != (batch, d)
            || cache.input.cols() != self.d_in()
        {
            return Err(Error::shape(
                "rff backward",
                grad_output.shape(),
                (batch, 2 * d),
            ));
        }

        let (grad_features, gamma, beta) = match (&self.batchnorm, &cache.batchnorm) {
            (Some(bn), Some(bc)) => {
                let (gx, gg, gb) = batchnorm_backward(bn, bc, grad_output)?;
                (gx, Some(gg), Some(gb))
            }
            (None, None) => (grad_output.clone(), None, None),
            _ => {
                return Err(Error::Parameter(
                    "cache was produced with a different batch-norm configuration".into(),
                ))
            }
        };

        let scale = (1.0 / d as f64).sqrt();
        let mut grad_pre = DenseMatrix::zeros(batch, d);
        for i in 0..batch {
            let f = cache.pre_activation.row(i);
            let g = grad_features.row(i);
            let out = grad_pre.row_mut(i);
            for m in 0..d {
                let (s, c) = f[m].sin_cos();
                out[m] = scale * (c * g[m + d] - s * g[m]);
            }
        }
        let grad_omega = grad_pre.transpose_matmul(&cache.input)?;
        let grad_input = grad_pre.matmul(&self.omega)?;
        Ok((
            LayerGrads {
                omega: grad_omega,
                gamma,
                beta,
            },
            grad_input,
        ))
    }
}
