use crate::error::Result;
use crate::numerics::DenseMatrix;

use super::{Dataset, FeatureStats};

/// Standard-deviation floor for constant columns in [`whiten`].
pub const STD_FLOOR: f64 = 1e-12;

/// Rescales each column to `[0, 1]` using the dataset's (training) min/max.
///
/// Constant columns map to 0. Rows outside the training range land outside
/// `[0, 1]` and are not clipped. The stored statistics are carried through
/// the same affine map.
pub fn normalize_minmax(data: &Dataset) -> Result<Dataset> {
    let s = data.stats();
    let (offset, scale): (Vec<f64>, Vec<f64>) = (0..s.dim())
        .map(|j| {
            let range = s.max[j] - s.min[j];
            if range > 0.0 {
                (s.min[j], 1.0 / range)
            } else {
                (s.min[j], 0.0)
            }
        })
        .unzip();
    apply_affine(data, &offset, &scale)
}

/// Standardizes each column with the dataset's (training) mean and stddev.
pub fn whiten(data: &Dataset) -> Result<Dataset> {
    let s = data.stats();
    let scale: Vec<f64> = s.std.iter().map(|&sd| 1.0 / sd.max(STD_FLOOR)).collect();
    apply_affine(data, &s.mean, &scale)
}

/// `x' = (x - offset) * scale` per column, on rows and statistics alike.
fn apply_affine(data: &Dataset, offset: &[f64], scale: &[f64]) -> Result<Dataset> {
    let x = data.x();
    let map = |j: usize, v: f64| {
        if scale[j] == 0.0 {
            0.0
        } else {
            (v - offset[j]) * scale[j]
        }
    };
    let out = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| map(j, x[(i, j)]));
    let s = data.stats();
    let stats = FeatureStats {
        min: (0..s.dim()).map(|j| map(j, s.min[j])).collect(),
        max: (0..s.dim()).map(|j| map(j, s.max[j])).collect(),
        mean: (0..s.dim()).map(|j| map(j, s.mean[j])).collect(),
        std: (0..s.dim()).map(|j| s.std[j] * scale[j]).collect(),
    };
    Dataset::with_stats(out, data.y().to_vec(), data.labels().clone(), stats)
}

/// Which normalizations to apply, in order: min-max, then whitening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preprocess {
    pub minmax: bool,
    pub whiten: bool,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self {
            minmax: true,
            whiten: true,
        }
    }
}

impl std::str::FromStr for Preprocess {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Preprocess {
            minmax: false,
            whiten: false,
        };
        for part in s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "minmax" => p.minmax = true,
                "whiten" => p.whiten = true,
                "none" => {}
                other => {
                    return Err(crate::error::Error::Config(format!(
                        "unknown preprocessing step '{other}'"
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl std::fmt::Display for Preprocess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.minmax, self.whiten) {
            (true, true) => f.write_str("minmax+whiten"),
            (true, false) => f.write_str("minmax"),
            (false, true) => f.write_str("whiten"),
            (false, false) => f.write_str("none"),
        }
    }
}

impl Preprocess {
    /// Fits on `train` only and applies the same transform to `test`.
    pub fn apply(self, train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
        let stats = FeatureStats::from_matrix(train.x());
        let mut train = train.adopt_stats(&stats)?;
        let mut test = test.adopt_stats(&stats)?;
        if self.minmax {
            train = normalize_minmax(&train)?;
            test = normalize_minmax(&test)?;
        }
        if self.whiten {
            train = whiten(&train)?;
            test = whiten(&test)?;
        }
        Ok((train, test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::LabelMap;

    fn ds(rows: &[[f64; 2]]) -> Dataset {
        Dataset::new(
            DenseMatrix::from_rows(rows).unwrap(),
            vec![0; rows.len()],
            LabelMap::from_names(["a"]),
        )
        .unwrap()
    }

    #[test]
    fn minmax_column() {
        let d = normalize_minmax(&ds(&[[2.0, 7.0], [4.0, 7.0], [6.0, 7.0]])).unwrap();
        assert_eq!(d.x().column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(d.x().column(1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn minmax_is_idempotent() {
        let d = normalize_minmax(&ds(&[[2.0, -1.0], [4.3, 8.0], [6.1, 0.7]])).unwrap();
        let e = normalize_minmax(&d).unwrap();
        for (a, b) in d.x().as_slice().iter().zip(e.x().as_slice()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn whiten_value() {
        // mean 5, population stddev 2
        let d = whiten(&ds(&[[3.0, 0.0], [7.0, 0.0]])).unwrap();
        assert_eq!(d.x()[(1, 0)], 1.0);
        assert_eq!(d.x().column(1), vec![0.0, 0.0]);
    }

    #[test]
    fn whitened_training_columns_are_standard() {
        let d = whiten(&ds(&[[1.0, 10.0], [2.0, -3.0], [4.5, 0.25], [8.0, 1.0]])).unwrap();
        let s = FeatureStats::from_matrix(d.x());
        for j in 0..2 {
            assert!(s.mean[j].abs() < 1e-10);
            assert!((s.std[j] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn test_rows_use_training_statistics() {
        let train = ds(&[[0.0, 1.0], [10.0, 3.0]]);
        let test = ds(&[[20.0, 2.0], [-5.0, 100.0]]);
        let (_, t) = Preprocess {
            minmax: true,
            whiten: false,
        }
        .apply(&train, &test)
        .unwrap();
        assert_eq!(t.x().row(0), &[2.0, 0.5]);
        assert_eq!(t.x().row(1), &[-0.5, 49.5]);
    }

    #[test]
    fn parse_pipeline() {
        assert_eq!(
            "minmax+whiten".parse::<Preprocess>().unwrap(),
            Preprocess::default()
        );
        assert!("zca".parse::<Preprocess>().is_err());
    }
}
