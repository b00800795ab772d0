use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Ordered label vocabulary: class `i` is `names[i]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut map = Self::new();
        for n in names {
            map.intern(&n.into());
        }
        map
    }

    /// Class index of `name`, assigning the next free index on first sight.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Per-column statistics. Population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    pub fn from_matrix(x: &DenseMatrix) -> Self {
        let (n, d) = x.shape();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (j, &v) in x.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
                mean[j] += v;
            }
        }
        let nf = n.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; d];
        for i in 0..n {
            for (j, &v) in x.row(i).iter().enumerate() {
                var[j] += (v - mean[j]) * (v - mean[j]);
            }
        }
        let std = var.iter().map(|s| (s / nf).sqrt()).collect();
        if n == 0 {
            min.iter_mut().for_each(|v| *v = 0.0);
            max.iter_mut().for_each(|v| *v = 0.0);
        }
        Self {
            min,
            max,
            mean,
            std,
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }
}

/// Labelled feature matrix plus the training-split statistics used by the
/// normalization transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DenseMatrix,
    y: Vec<usize>,
    labels: LabelMap,
    stats: FeatureStats,
}

impl Dataset {
    /// Builds a dataset whose statistics come from its own rows.
    pub fn new(x: DenseMatrix, y: Vec<usize>, labels: LabelMap) -> Result<Self> {
        let stats = FeatureStats::from_matrix(&x);
        Self::with_stats(x, y, labels, stats)
    }

    pub fn with_stats(
        x: DenseMatrix,
        y: Vec<usize>,
        labels: LabelMap,
        stats: FeatureStats,
    ) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::Data(format!(
                "dataset must have at least one row and one feature, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        if y.len() != x.rows() {
            return Err(Error::Data(format!(
                "{} labels for {} samples",
                y.len(),
                x.rows()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= labels.len()) {
            return Err(Error::Data(format!(
                "label {bad} outside [0, {})",
                labels.len()
            )));
        }
        if !x.is_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if stats.dim() != x.cols() {
            return Err(Error::Data(format!(
                "statistics cover {} columns, data has {}",
                stats.dim(),
                x.cols()
            )));
        }
        Ok(Self {
            x,
            y,
            labels,
            stats,
        })
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn stats(&self) -> &FeatureStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Same rows, statistics replaced (e.g. by those of the training split).
    pub fn adopt_stats(&self, stats: &FeatureStats) -> Result<Self> {
        Self::with_stats(
            self.x.clone(),
            self.y.clone(),
            self.labels.clone(),
            stats.clone(),
        )
    }

    /// Replaces the label vocabulary with a superset of the current one.
    pub fn adopt_labels(&self, labels: &LabelMap) -> Result<Self> {
        let mut y = Vec::with_capacity(self.y.len());
        for &c in &self.y {
            let name = &self.labels.names()[c];
            let mapped = labels.get(name).ok_or_else(|| {
                Error::Data(format!("label '{name}' missing from the shared vocabulary"))
            })?;
            y.push(mapped);
        }
        Self::with_stats(self.x.clone(), y, labels.clone(), self.stats.clone())
    }

    /// Appends zero columns up to `d` features.
    pub fn pad_features(&self, d: usize) -> Result<Self> {
        if d < self.dim() {
            return Err(Error::Data(format!(
                "cannot shrink {} features to {d}",
                self.dim()
            )));
        }
        if d == self.dim() {
            return Ok(self.clone());
        }
        let x = DenseMatrix::from_fn(self.len(), d, |i, j| {
            if j < self.dim() {
                self.x[(i, j)]
            } else {
                0.0
            }
        });
        Self::new(x, self.y.clone(), self.labels.clone())
    }

    /// Rows at `indices`, keeping labels and statistics.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::with_stats(
            self.x.select_rows(indices),
            indices.iter().map(|&i| self.y[i]).collect(),
            self.labels.clone(),
            self.stats.clone(),
        )
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}
