//! The three MONK's problems, regenerated from their defining rules.
//!
//! Each instance has six categorical attributes with domains of size
//! 3, 3, 2, 3, 4, 2 (values start at 1), so the full instance space has
//! 432 points and serves as the test set. Training sets are drawn without
//! replacement at the classic sizes; problem 3 flips 5% of training labels.

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};

use super::{Dataset, LabelMap};

pub const ATTRIBUTE_DOMAINS: [usize; 6] = [3, 3, 2, 3, 4, 2];
pub const TRAIN_SIZES: [usize; 3] = [124, 169, 122];
pub const MONKS3_NOISY_LABELS: usize = 6;

/// Target concept of problem `problem` (1, 2 or 3) for attribute values `a`.
pub fn concept(problem: u8, a: &[usize; 6]) -> bool {
    match problem {
        1 => a[0] == a[1] || a[4] == 1,
        2 => a.iter().filter(|&&v| v == 1).count() == 2,
        3 => (a[4] == 3 && a[3] == 1) || (a[4] != 4 && a[1] != 3),
        _ => unreachable!("problem validated by caller"),
    }
}

/// All 432 attribute vectors in lexicographic order.
pub fn instance_space() -> Vec<[usize; 6]> {
    let mut out = Vec::with_capacity(432);
    let mut a = [1usize; 6];
    loop {
        out.push(a);
        let mut k = 5;
        loop {
            a[k] += 1;
            if a[k] <= ATTRIBUTE_DOMAINS[k] {
                break;
            }
            a[k] = 1;
            if k == 0 {
                return out;
            }
            k -= 1;
        }
    }
}

fn to_dataset(rows: &[[usize; 6]], labels: &[bool]) -> Result<Dataset> {
    let x = DenseMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j] as f64);
    let y = labels.iter().map(|&b| usize::from(b)).collect();
    Dataset::new(x, y, LabelMap::from_names(["0", "1"]))
}

/// `(train, test)` for MONK's problem `problem`, training subset drawn with `seed`.
pub fn generate(problem: u8, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(1..=3).contains(&problem) {
        return Err(Error::Parameter(format!(
            "MONK's problem must be 1, 2 or 3, got {problem}"
        )));
    }
    let space = instance_space();
    let truth: Vec<bool> = space.iter().map(|a| concept(problem, a)).collect();
    let test = to_dataset(&space, &truth)?;

    let mut rng = Rng::derived(seed, u64::from(problem));
    let mut idx: Vec<usize> = (0..space.len()).collect();
    rng.shuffle(&mut idx);
    idx.truncate(TRAIN_SIZES[usize::from(problem) - 1]);
    idx.sort_unstable();
    let rows: Vec<[usize; 6]> = idx.iter().map(|&i| space[i]).collect();
    let mut labels: Vec<bool> = idx.iter().map(|&i| truth[i]).collect();
    if problem == 3 {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        rng.shuffle(&mut order);
        for &i in &order[..MONKS3_NOISY_LABELS] {
            labels[i] = !labels[i];
        }
    }
    Ok((to_dataset(&rows, &labels)?, test))
}
