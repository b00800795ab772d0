use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Rng;

use super::{Dataset, FeatureStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Separate train and test files.
    Provided,
    /// Random half for training (the extra sample of an odd `n` goes to
    /// training), the rest for testing.
    RandomHalf,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "provided" => Ok(SplitMode::Provided),
            "random_half" | "random-half" => Ok(SplitMode::RandomHalf),
            other => Err(Error::Config(format!("unknown split mode '{other}'"))),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Provided => "provided",
            SplitMode::RandomHalf => "random_half",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
}

/// Indices of the training and test halves for `n` samples.
pub fn random_half_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Data(format!(
            "random_half split needs n >= 2, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    Rng::derived(seed, 0x5151_7000).shuffle(&mut idx);
    let n_train = n.div_ceil(2);
    let mut test = idx.split_off(n_train);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

/// Splits `data`; both parts carry the training part's statistics and the
/// shared label vocabulary.
pub fn split(data: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    match spec.mode {
        SplitMode::RandomHalf => {
            let (tr, te) = random_half_indices(data.len(), spec.seed)?;
            let train = data.subset(&tr)?;
            let stats = FeatureStats::from_matrix(train.x());
            Ok((
                train.adopt_stats(&stats)?,
                data.subset(&te)?.adopt_stats(&stats)?,
            ))
        }
        SplitMode::Provided => Err(Error::Config(
            "a provided split comes from separate train/test files, not from split()".into(),
        )),
    }
}
