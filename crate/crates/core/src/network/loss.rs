use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Data-fit term of the objective.
///
/// All kinds use one output per class. `Squared` regresses one-hot targets,
/// `SquaredHinge` scores each output against a `±1` one-vs-all target and
/// `CrossEntropy` applies a softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    SquaredHinge,
    CrossEntropy,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::SquaredHinge => "squared_hinge",
            LossKind::CrossEntropy => "cross_entropy",
        }
    }

    /// Squared hinge for binary tasks, softmax cross-entropy otherwise.
    pub fn default_for(classes: usize) -> Self {
        if classes <= 2 {
            LossKind::SquaredHinge
        } else {
            LossKind::CrossEntropy
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "squared" | "mse" => Ok(LossKind::Squared),
            "squared_hinge" | "hinge" => Ok(LossKind::SquaredHinge),
            "cross_entropy" | "ce" => Ok(LossKind::CrossEntropy),
            other => Err(Error::Parameter(format!("unknown loss kind '{other}'"))),
        }
    }
}

/// `max(0, 1 - y·score)²` for a margin label `y ∈ {-1, +1}`.
#[inline]
pub fn squared_hinge(score: f64, margin_label: f64) -> f64 {
    let slack = (1.0 - margin_label * score).max(0.0);
    slack * slack
}

/// Mean per-sample loss over the batch and its gradient w.r.t. the logits.
pub(crate) fn data_loss(
    kind: LossKind,
    logits: &DenseMatrix,
    labels: &[usize],
) -> Result<(f64, DenseMatrix)> {
    let (n, classes) = logits.shape();
    if labels.len() != n {
        return Err(Error::Data(format!(
            "{} labels for {n} rows of logits",
            labels.len()
        )));
    }
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
        return Err(Error::Data(format!(
            "label {y} at row {i} outside [0, {classes})"
        )));
    }
    if n == 0 {
        return Ok((0.0, DenseMatrix::zeros(0, classes)));
    }
    let inv_n = 1.0 / n as f64;
    let mut grad = DenseMatrix::zeros(n, classes);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let z = logits.row(i);
        let g = grad.row_mut(i);
        match kind {
            LossKind::Squared => {
                for c in 0..classes {
                    let r = z[c] - if c == y { 1.0 } else { 0.0 };
                    total += r * r;
                    g[c] = 2.0 * r * inv_n;
                }
            }
            LossKind::SquaredHinge => {
                for c in 0..classes {
                    let t = if c == y { 1.0 } else { -1.0 };
                    let slack = (1.0 - t * z[c]).max(0.0);
                    total += slack * slack;
                    g[c] = -2.0 * t * slack * inv_n;
                }
            }
            LossKind::CrossEntropy => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
                let log_norm = max + sum.ln();
                total += log_norm - z[y];
                for c in 0..classes {
                    let p = (z[c] - log_norm).exp();
                    g[c] = (p - if c == y { 1.0 } else { 0.0 }) * inv_n;
                }
            }
        }
    }
    Ok((total * inv_n, grad))
}
