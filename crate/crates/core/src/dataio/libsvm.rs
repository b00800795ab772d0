//! Sparse `label idx:val idx:val ...` files with 1-based feature indices.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

use super::{Dataset, LabelMap};

pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    load_libsvm_with_labels(path, &mut LabelMap::new())
}

pub fn load_libsvm_with_labels(path: &Path, labels: &mut LabelMap) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(std::io::BufReader::new(file), path, labels)
}

pub(crate) fn parse_libsvm<R: BufRead>(
    reader: R,
    path: &Path,
    labels: &mut LabelMap,
) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut y = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected idx:val, found '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(lineno, format!("bad feature index '{idx}'")))?;
            if idx == 0 {
                return Err(err(lineno, "feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(
                    lineno,
                    format!("feature index {idx} does not increase (previous {last})"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(lineno, format!("bad feature value '{val}'")))?;
            if !val.is_finite() {
                return Err(err(lineno, format!("non-finite feature value '{val}'")));
            }
            last = idx;
            entries.push((idx - 1, val));
        }
        dim = dim.max(last);
        y.push(labels.intern(label));
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let dim = dim.max(1);
    let mut x = DenseMatrix::zeros(rows.len(), dim);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            x[(i, j)] = v;
        }
    }
    Dataset::new(x, y, labels.clone())
}
