//! Stacked RFF layers with a linear readout, losses, and backpropagation.

mod loss;
mod snapshot;

use serde::{Deserialize, Serialize};

pub use loss::{squared_hinge, LossKind};
pub use snapshot::{load_network, save_network, SNAPSHOT_FORMAT};

use crate::error::{Error, Result};
use crate::numerics::{gaussian_matrix, DenseMatrix, Rng};
use crate::rff_layer::{BatchNormState, LayerCache, LayerGrads, RffLayer, DEFAULT_INIT_STDDEV};

/// Standard deviation of the Gaussian readout initialization.
pub const READOUT_INIT_STDDEV: f64 = 0.1;

/// Suggested depth for `n` training samples: `⌈n/1000⌉ + 1`.
pub fn default_layer_count(n_samples: usize) -> usize {
    n_samples.div_ceil(1000) + 1
}

/// Architecture of a network before its parameters are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub d_in: usize,
    pub classes: usize,
    pub layer_count: usize,
    /// Frequencies `D` per layer; its length must equal `layer_count`.
    pub features: Vec<usize>,
    pub loss: LossKind,
    pub batchnorm: bool,
    pub init_stddev: f64,
}

impl ArchSpec {
    pub fn new(d_in: usize, classes: usize, features: Vec<usize>, loss: LossKind) -> Self {
        Self {
            d_in,
            classes,
            layer_count: features.len(),
            features,
            loss,
            batchnorm: false,
            init_stddev: DEFAULT_INIT_STDDEV,
        }
    }

    pub fn with_batchnorm(mut self, on: bool) -> Self {
        self.batchnorm = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<RffLayer>,
    /// `classes x 2D_last`.
    readout_w: DenseMatrix,
    readout_b: Vec<f64>,
    loss: LossKind,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub caches: Vec<LayerCache>,
    pub logits: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub data_loss: f64,
    pub reg_loss: f64,
    pub total: f64,
    pub correct_count: usize,
}

/// Gradients for every trainable parameter of a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
    pub readout_w: DenseMatrix,
    pub readout_b: Vec<f64>,
}

impl Gradients {
    /// Same block order as [`Network::params`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.layers.iter().flat_map(|l| l.blocks()).collect();
        out.push(self.readout_w.as_slice());
        out.push(&self.readout_b);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let Self {
            layers,
            readout_w,
            readout_b,
        } = self;
        let mut out: Vec<&mut [f64]> = layers.iter_mut().flat_map(|l| l.blocks_mut()).collect();
        out.push(readout_w.as_mut_slice());
        out.push(readout_b.as_mut_slice());
        out
    }
}

impl Network {
    pub fn build(spec: &ArchSpec, rng: &mut Rng) -> Result<Self> {
        if spec.layer_count == 0 {
            return Err(Error::Parameter(
                "a network needs at least one layer".into(),
            ));
        }
        if spec.features.len() != spec.layer_count {
            return Err(Error::Parameter(format!(
                "{} layers but {} entries in the per-layer D list",
                spec.layer_count,
                spec.features.len()
            )));
        }
        if spec.classes < 2 {
            return Err(Error::Parameter(format!(
                "classification needs at least 2 classes, got {}",
                spec.classes
            )));
        }
        let mut layers = Vec::with_capacity(spec.layer_count);
        let mut d_in = spec.d_in;
        for &d in &spec.features {
            let mut layer = RffLayer::init(d_in, d, spec.init_stddev, rng)?;
            if spec.batchnorm {
                layer = layer.with_batchnorm(BatchNormState::new(2 * d))?;
            }
            d_in = layer.output_dim();
            layers.push(layer);
        }
        let readout_w = gaussian_matrix(spec.classes, d_in, 0.0, READOUT_INIT_STDDEV, rng)?;
        Ok(Self {
            layers,
            readout_w,
            readout_b: vec![0.0; spec.classes],
            loss: spec.loss,
        })
    }

    /// Assembles a network from parts, checking that dimensions chain.
    pub fn from_parts(
        layers: Vec<RffLayer>,
        readout_w: DenseMatrix,
        readout_b: Vec<f64>,
        loss: LossKind,
    ) -> Result<Self> {
        let net = Self {
            layers,
            readout_w,
            readout_b,
            loss,
        };
        net.validate()?;
        Ok(net)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let last = self
            .layers
            .last()
            .ok_or_else(|| Error::Parameter("a network needs at least one layer".into()))?;
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[1].d_in() != pair[0].output_dim() {
                return Err(Error::Parameter(format!(
                    "layer {} expects {} inputs but layer {i} emits {}",
                    i + 1,
                    pair[1].d_in(),
                    pair[0].output_dim()
                )));
            }
        }
        if self.readout_w.cols() != last.output_dim() {
            return Err(Error::Parameter(format!(
                "readout has {} columns, last layer emits {}",
                self.readout_w.cols(),
                last.output_dim()
            )));
        }
        if self.readout_b.len() != self.readout_w.rows() || self.readout_w.rows() < 2 {
            return Err(Error::Parameter(format!(
                "readout bias length {} does not match {} classes",
                self.readout_b.len(),
                self.readout_w.rows()
            )));
        }
        for layer in &self.layers {
            if let Some(bn) = layer.batchnorm() {
                if bn.features() != layer.output_dim()
                    || bn.beta.len() != bn.features()
                    || bn.running_mean.len() != bn.features()
                    || bn.running_var.len() != bn.features()
                {
                    return Err(Error::Parameter("batch-norm state has wrong length".into()));
                }
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[RffLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [RffLayer] {
        &mut self.layers
    }

    pub fn readout_w(&self) -> &DenseMatrix {
        &self.readout_w
    }

    pub fn readout_b(&self) -> &[f64] {
        &self.readout_b
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn classes(&self) -> usize {
        self.readout_w.rows()
    }

    pub fn has_batchnorm(&self) -> bool {
        self.layers.iter().any(|l| l.batchnorm().is_some())
    }

    /// Trainable parameter blocks: each layer's blocks in order, then the
    /// readout weights and bias.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.layers.iter().flat_map(|l| l.params()).collect();
        out.push(self.readout_w.as_slice());
        out.push(&self.readout_b);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let Self {
            layers,
            readout_w,
            readout_b,
            ..
        } = self;
        let mut out: Vec<&mut [f64]> = layers.iter_mut().flat_map(|l| l.params_mut()).collect();
        out.push(readout_w.as_mut_slice());
        out.push(readout_b.as_mut_slice());
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|b| b.len()).sum()
    }

    /// `‖θ‖²` over every trainable parameter.
    pub fn param_sq_norm(&self) -> f64 {
        self.params()
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn readout(&self, s: &DenseMatrix) -> Result<DenseMatrix> {
        let mut logits = s.matmul_transpose(&self.readout_w)?;
        for i in 0..logits.rows() {
            for (z, b) in logits.row_mut(i).iter_mut().zip(&self.readout_b) {
                *z += b;
            }
        }
        Ok(logits)
    }

    pub fn forward_full(&self, x: &DenseMatrix, training: bool) -> Result<ForwardTrace> {
        if x.cols() != self.d_in() {
            return Err(Error::shape(
                "network forward",
                x.shape(),
                (x.rows(), self.d_in()),
            ));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut s = x.clone();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&s, training)?;
            caches.push(cache);
            s = out;
        }
        let logits = self.readout(&s)?;
        Ok(ForwardTrace { caches, logits })
    }

    /// Inference-mode logits, without caches.
    pub fn logits(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.d_in() {
            return Err(Error::shape(
                "network forward",
                x.shape(),
                (x.rows(), self.d_in()),
            ));
        }
        let mut s = self.layers[0].infer(x)?;
        for layer in &self.layers[1..] {
            s = layer.infer(&s)?;
        }
        self.readout(&s)
    }

    /// Objective `(1/n) Σ L(y_i, f(x_i)) + (λ/2)‖θ‖²` and `∂(data loss)/∂logits`.
    pub fn compute_loss(
        &self,
        logits: &DenseMatrix,
        labels: &[usize],
        lambda: f64,
    ) -> Result<(LossReport, DenseMatrix)> {
        if logits.cols() != self.classes() {
            return Err(Error::shape(
                "compute_loss",
                logits.shape(),
                (logits.rows(), self.classes()),
            ));
        }
        let (data_loss, grad) = loss::data_loss(self.loss, logits, labels)?;
        let reg_loss = 0.5 * lambda * self.param_sq_norm();
        let correct_count = argmax_rows(logits)
            .iter()
            .zip(labels)
            .filter(|(p, y)| p == y)
            .count();
        Ok((
            LossReport {
                data_loss,
                reg_loss,
                total: data_loss + reg_loss,
                correct_count,
            },
            grad,
        ))
    }

    /// Backpropagates `grad_logits` through the readout and every layer and
    /// adds `λθ` from the L2 term.
    pub fn backward_full(
        &self,
        trace: &ForwardTrace,
        grad_logits: &DenseMatrix,
        lambda: f64,
    ) -> Result<Gradients> {
        if trace.caches.len() != self.layers.len() {
            return Err(Error::Parameter(format!(
                "trace has {} layers, network has {}",
                trace.caches.len(),
                self.layers.len()
            )));
        }
        if grad_logits.shape() != trace.logits.shape() || grad_logits.cols() != self.classes() {
            return Err(Error::shape(
                "backward_full",
                grad_logits.shape(),
                trace.logits.shape(),
            ));
        }
        let last = &trace.caches[trace.caches.len() - 1].output;
        if last.cols() != self.readout_w.cols() {
            return Err(Error::shape(
                "backward_full",
                last.shape(),
                self.readout_w.shape(),
            ));
        }

        let readout_w = grad_logits.transpose_matmul(last)?;
        let mut readout_b = vec![0.0; self.classes()];
        for i in 0..grad_logits.rows() {
            for (b, g) in readout_b.iter_mut().zip(grad_logits.row(i)) {
                *b += g;
            }
        }
        let mut upstream = grad_logits.matmul(&self.readout_w)?;
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&trace.caches).rev() {
            let (g, gi) = layer.backward(cache, &upstream)?;
            layer_grads.push(g);
            upstream = gi;
        }
        layer_grads.reverse();

        let mut grads = Gradients {
            layers: layer_grads,
            readout_w,
            readout_b,
        };
        if lambda != 0.0 {
            for (g, p) in grads.blocks_mut().into_iter().zip(self.params()) {
                for (gv, pv) in g.iter_mut().zip(p) {
                    *gv += lambda * pv;
                }
            }
        }
        Ok(grads)
    }

    /// Copies the batch statistics of a training-mode trace into the running
    /// estimates of every batch-norm layer.
    pub fn update_running_stats(&mut self, trace: &ForwardTrace) {
        for (layer, cache) in self.layers.iter_mut().zip(&trace.caches) {
            layer.update_running_stats(cache);
        }
    }

    /// Predicted class per row: argmax of the logits, ties to the lowest index.
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.logits(x)?))
    }

    /// Raw output of every layer (pre-batch-norm trig features) in inference
    /// mode, used by the kernel diagnostics.
    pub fn layer_features(&self, x: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut s = x.clone();
        for layer in &self.layers {
            let (raw, _) = layer.trig_features(&s)?;
            s = layer.infer(&s)?;
            out.push(raw);
        }
        Ok(out)
    }
}

/// Index of the largest entry in each row; the first wins on ties.
pub fn argmax_rows(m: &DenseMatrix) -> Vec<usize> {
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
