use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};
use crate::rff_layer::RffLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Rbf,
    Laplacian,
    Cauchy,
}

impl FromStr for DensityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rbf" | "gaussian" => Ok(DensityKind::Rbf),
            "laplacian" => Ok(DensityKind::Laplacian),
            "cauchy" => Ok(DensityKind::Cauchy),
            other => Err(Error::Parameter(format!(
                "unknown spectral density '{other}' (expected rbf, laplacian or cauchy)"
            ))),
        }
    }
}

impl fmt::Display for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DensityKind::Rbf => "rbf",
            DensityKind::Laplacian => "laplacian",
            DensityKind::Cauchy => "cauchy",
        })
    }
}

/// A shift-invariant kernel identified by its frequency distribution.
///
/// | kind      | kernel `k(Δ)`                | frequency coordinates |
/// |-----------|------------------------------|-----------------------|
/// | rbf       | `exp(-‖Δ‖²/2σ²)`             | `N(0, 1/σ²)`          |
/// | laplacian | `exp(-‖Δ‖₁/σ)`               | `Cauchy(0, 1/σ)`      |
/// | cauchy    | `Π 1/(1 + Δᵢ²/σ²)`           | `Laplace(0, 1/σ)`     |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    kind: DensityKind,
    bandwidth: f64,
}

impl SpectralDensity {
    pub fn new(kind: DensityKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Parameter(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self { kind, bandwidth })
    }

    pub fn rbf(bandwidth: f64) -> Result<Self> {
        Self::new(DensityKind::Rbf, bandwidth)
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `D x d` frequencies drawn from this density.
    pub fn sample_frequencies(
        &self,
        features: usize,
        d: usize,
        rng: &mut Rng,
    ) -> Result<DenseMatrix> {
        if features == 0 || d == 0 {
            return Err(Error::Parameter(format!(
                "frequency matrix needs D, d >= 1, got {features}x{d}"
            )));
        }
        let scale = 1.0 / self.bandwidth;
        Ok(DenseMatrix::from_fn(features, d, |_, _| match self.kind {
            DensityKind::Rbf => rng.normal(0.0, scale),
            DensityKind::Laplacian => rng.cauchy(scale),
            DensityKind::Cauchy => rng.laplace(scale),
        }))
    }

    /// Closed-form kernel value between `u` and `v`.
    pub fn kernel(&self, u: &[f64], v: &[f64]) -> f64 {
        let s = self.bandwidth;
        let diffs = u.iter().zip(v).map(|(a, b)| a - b);
        match self.kind {
            DensityKind::Rbf => (-diffs.map(|t| t * t).sum::<f64>() / (2.0 * s * s)).exp(),
            DensityKind::Laplacian => (-diffs.map(f64::abs).sum::<f64>() / s).exp(),
            DensityKind::Cauchy => diffs.map(|t| 1.0 / (1.0 + t * t / (s * s))).product(),
        }
    }
}

impl fmt::Display for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(bandwidth={})", self.kind, self.bandwidth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxError {
    pub mean: f64,
    pub max: f64,
}

/// `|⟨ψ(uᵢ), ψ(vᵢ)⟩ - k(uᵢ - vᵢ)|` over the row pairs of `u` and `v`, with
/// `ψ` built from `features` frequencies drawn from `density`.
pub fn rff_approx_error(
    density: &SpectralDensity,
    features: usize,
    u: &DenseMatrix,
    v: &DenseMatrix,
    rng: &mut Rng,
) -> Result<ApproxError> {
    if u.shape() != v.shape() {
        return Err(Error::shape("rff_approx_error", u.shape(), v.shape()));
    }
    if u.rows() == 0 {
        return Err(Error::Parameter(
            "rff_approx_error needs at least one pair".into(),
        ));
    }
    let layer = RffLayer::from_omega(density.sample_frequencies(features, u.cols(), rng)?)?;
    let (fu, _) = layer.trig_features(u)?;
    let (fv, _) = layer.trig_features(v)?;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for i in 0..u.rows() {
        let est = crate::numerics::dot(fu.row(i), fv.row(i));
        let err = (est - density.kernel(u.row(i), v.row(i))).abs();
        sum += err;
        max = max.max(err);
    }
    Ok(ApproxError {
        mean: sum / u.rows() as f64,
        max,
    })
}

/// Approximation error for each `D` in `feature_counts`, averaged over
/// `repeats` independent frequency draws.
///
/// The `pairs` point pairs are drawn uniformly from `[0, 1]^dim` once and
/// shared by every `D`.
pub fn approx_error_curve(
    density: &SpectralDensity,
    feature_counts: &[usize],
    pairs: usize,
    dim: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<(usize, ApproxError)>> {
    if feature_counts.is_empty() || pairs == 0 || dim == 0 || repeats == 0 {
        return Err(Error::Parameter(
            "error curve needs a D list, pairs >= 1, dim >= 1 and repeats >= 1".into(),
        ));
    }
    let mut rng = Rng::derived(seed, u64::MAX);
    let u = DenseMatrix::from_fn(pairs, dim, |_, _| rng.uniform());
    let v = DenseMatrix::from_fn(pairs, dim, |_, _| rng.uniform());
    feature_counts
        .iter()
        .map(|&features| {
            let mut mean = 0.0;
            let mut max = 0.0;
            for r in 0..repeats {
                let mut rng = Rng::derived(seed.wrapping_add(r as u64), features as u64);
                let e = rff_approx_error(density, features, &u, &v, &mut rng)?;
                mean += e.mean;
                max += e.max;
            }
            let k = repeats as f64;
            Ok((
                features,
                ApproxError {
                    mean: mean / k,
                    max: max / k,
                },
            ))
        })
        .collect()
}

/// Two-layer RBF composition on unit-norm features:
/// `k⁽²⁾ = exp(-2λ)·exp(2λ·k_inner)`, where `λ = 1/(2σ₂²)` for an outer
/// bandwidth `σ₂`.
pub fn composed_rbf_oracle(k_inner: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&k_inner) {
        return Err(Error::Parameter(format!(
            "k_inner must lie in [0, 1], got {k_inner}"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok((2.0 * lambda * (k_inner - 1.0)).exp())
}
