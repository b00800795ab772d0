//! Kernel diagnostics: empirical kernel matrices per layer, kernel PCA,
//! frequency histograms, and RFF approximation error.
//!
//! Everything here reads raw trig features (before batch norm), whose rows
//! have unit norm, so the kernel matrices have a unit diagonal.

mod histogram;
mod spectral;

use std::fmt::Write as _;
use std::path::Path;

pub use histogram::{omega_histogram, Histogram};
pub use spectral::{
    approx_error_curve, composed_rbf_oracle, rff_approx_error, ApproxError, DensityKind,
    SpectralDensity,
};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::numerics::{dot, sym_eig, sym_eig_topk, DenseMatrix};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;
pub const DIAGONAL_TOL: f64 = 1e-10;

/// Gram matrix of one layer's features.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DenseMatrix,
    pub layer_index: usize,
}

/// Measured deviations from the kernel-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCheck {
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_diagonal_error: f64,
}

impl KernelCheck {
    pub fn passes(&self) -> bool {
        self.max_asymmetry <= SYMMETRY_TOL
            && self.min_eigenvalue >= -PSD_TOL
            && self.max_diagonal_error <= DIAGONAL_TOL
    }
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.values.rows()
    }

    /// Measures symmetry, the smallest eigenvalue and the diagonal error.
    pub fn check(&self) -> Result<KernelCheck> {
        let k = &self.values;
        if !k.is_square() || k.rows() == 0 {
            return Err(Error::shape(
                "kernel check",
                k.shape(),
                (k.rows(), k.rows()),
            ));
        }
        let max_asymmetry = k.asymmetry();
        // Eigenvalues of the symmetric part; the asymmetry is reported separately.
        let sym = DenseMatrix::from_fn(k.rows(), k.cols(), |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
        let eig = sym_eig(&sym)?;
        let min_eigenvalue = eig.values.last().copied().unwrap_or(0.0);
        let max_diagonal_error = (0..k.rows())
            .map(|i| (k[(i, i)] - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(KernelCheck {
            max_asymmetry,
            min_eigenvalue,
            max_diagonal_error,
        })
    }

    /// Like [`check`](Self::check) but fails when an invariant is violated.
    pub fn validate(&self) -> Result<KernelCheck> {
        let c = self.check()?;
        if !c.passes() {
            return Err(Error::Numeric(format!(
                "layer {} kernel violates invariants: asymmetry {:e}, min eigenvalue {:e}, diagonal error {:e}",
                self.layer_index, c.max_asymmetry, c.min_eigenvalue, c.max_diagonal_error
            )));
        }
        Ok(c)
    }

    /// Dense CSV: header `c0,...,c{n-1}`, then one row per sample.
    pub fn to_csv(&self) -> String {
        let n = self.size();
        let mut out = (0..n)
            .map(|j| format!("c{j}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for i in 0..n {
            let row: Vec<String> = self.values.row(i).iter().map(f64::to_string).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads a matrix written by [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str, layer_index: usize, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let n = match lines.next() {
            Some((_, header)) => header.split(',').count(),
            None => return Err(err(1, "empty kernel file".into())),
        };
        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| err(i + 1, e.to_string()))?;
            if row.len() != n {
                return Err(err(
                    i + 1,
                    format!("expected {n} values, found {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(err(
                rows.len() + 1,
                format!("expected {n} rows, found {}", rows.len()),
            ));
        }
        Ok(Self {
            values: DenseMatrix::from_rows(&rows)?,
            layer_index,
        })
    }
}

/// `K = S·Sᵀ` for a feature matrix `S` (one sample per row).
pub fn empirical_kernel(features: &DenseMatrix, layer_index: usize) -> Result<KernelMatrix> {
    let n = features.rows();
    if n == 0 || features.cols() == 0 {
        return Err(Error::Parameter(
            "empirical kernel of an empty feature matrix".into(),
        ));
    }
    let mut values = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(features.row(i), features.row(j));
            values.row_mut(i)[j] = v;
            values.row_mut(j)[i] = v;
        }
    }
    Ok(KernelMatrix {
        values,
        layer_index,
    })
}

/// One kernel matrix per layer of `net`, evaluated on the rows of `x`.
pub fn layer_kernels(net: &Network, x: &DenseMatrix) -> Result<Vec<KernelMatrix>> {
    net.layer_features(x)?
        .iter()
        .enumerate()
        .map(|(l, s)| empirical_kernel(s, l))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpcaProjection {
    /// `n x k`, column `c` is component `c` scaled by `√λ_c`.
    pub coords: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    /// Set when the centered kernel vanishes (all samples alike).
    pub degenerate: bool,
}

impl KpcaProjection {
    /// Header `index,label,pc1,...`; `labels` may be empty.
    pub fn to_csv(&self, labels: &[usize]) -> String {
        let k = self.coords.cols();
        let mut out = String::from("index,label");
        for c in 1..=k {
            let _ = write!(out, ",pc{c}");
        }
        out.push('\n');
        for i in 0..self.coords.rows() {
            let label = labels.get(i).map(usize::to_string).unwrap_or_default();
            let _ = write!(out, "{i},{label}");
            for v in self.coords.row(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Double-centers `K` and projects onto its top `k` components.
pub fn kpca_project(kernel: &KernelMatrix, k: usize) -> Result<KpcaProjection> {
    let km = &kernel.values;
    let n = km.rows();
    if !km.is_square() || n == 0 {
        return Err(Error::shape("kpca_project", km.shape(), (n, n)));
    }
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "kPCA needs 1 <= k <= n = {n}, got {k}"
        )));
    }
    let row_mean: Vec<f64> = (0..n)
        .map(|i| km.row(i).iter().sum::<f64>() / n as f64)
        .collect();
    let col_mean: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| km[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let all_mean = row_mean.iter().sum::<f64>() / n as f64;
    let centered = DenseMatrix::from_fn(n, n, |i, j| {
        km[(i, j)] - row_mean[i] - col_mean[j] + all_mean
    });

    let scale = km.max_abs().max(1.0);
    if centered.max_abs() <= 1e-12 * scale {
        return Ok(KpcaProjection {
            coords: DenseMatrix::zeros(n, k),
            eigenvalues: vec![0.0; k],
            degenerate: true,
        });
    }
    let (values, vectors) = sym_eig_topk(&centered, k)?;
    let mut coords = DenseMatrix::zeros(n, k);
    for c in 0..k {
        let s = values[c].max(0.0).sqrt();
        let mut col: Vec<f64> = (0..n).map(|i| vectors[(i, c)] * s).collect();
        let pivot = col.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if pivot < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, v) in col.into_iter().enumerate() {
            coords.row_mut(i)[c] = v;
        }
    }
    Ok(KpcaProjection {
        coords,
        eigenvalues: values,
        degenerate: false,
    })
}
