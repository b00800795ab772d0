use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rff_layer::RffLayer;

/// Equal-width histogram; `edges.len() == counts.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 1 {
            return Err(Error::Parameter("histogram needs at least one bin".into()));
        }
        if values.is_empty() {
            return Err(Error::Parameter("histogram of an empty sample".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `bin_start,bin_end,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        out
    }
}

/// Histogram of input dimension `dim` of a layer's frequencies.
pub fn omega_histogram(layer: &RffLayer, dim: usize, bins: usize) -> Result<Histogram> {
    if dim >= layer.d_in() {
        return Err(Error::Parameter(format!(
            "dimension {dim} out of range for a layer with {} inputs",
            layer.d_in()
        )));
    }
    Histogram::from_values(&layer.omega().column(dim), bins)
}
