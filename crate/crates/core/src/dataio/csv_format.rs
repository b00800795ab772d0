use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::numerics::DenseMatrix;

use super::{Dataset, LabelMap};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

impl LabelColumn {
    fn resolve(self, width: usize) -> usize {
        match self {
            LabelColumn::Index(i) => i,
            LabelColumn::Last => width.saturating_sub(1),
        }
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "last" | "-1" => Ok(LabelColumn::Last),
            other => other.parse::<usize>().map(LabelColumn::Index).map_err(|_| {
                Error::Config(format!(
                    "label column must be an index or 'last', got '{other}'"
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: LabelColumn::Last,
            has_header: false,
        }
    }
}

/// Loads a comma-separated file; labels are mapped in first-appearance order.
pub fn load_csv(path: &Path, opts: CsvOptions) -> Result<Dataset> {
    let mut labels = LabelMap::new();
    load_csv_with_labels(path, opts, &mut labels)
}

/// Like [`load_csv`] but extends an existing label vocabulary, so separate
/// train and test files share one class numbering.
pub fn load_csv_with_labels(
    path: &Path,
    opts: CsvOptions,
    labels: &mut LabelMap,
) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, path, opts, labels)
}

fn parse_csv<R: std::io::Read>(
    reader: R,
    path: &Path,
    opts: CsvOptions,
    labels: &mut LabelMap,
) -> Result<Dataset> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        if w < 2 {
            return Err(parse_err(
                line,
                "need a label and at least one feature".into(),
            ));
        }
        let label_col = opts.label_column.resolve(w);
        if label_col >= w {
            return Err(parse_err(
                line,
                format!("label column {label_col} out of range for {w} fields"),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_col {
                if cell.is_empty() {
                    return Err(parse_err(line, "missing label".into()));
                }
                y.push(labels.intern(cell));
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    parse_err(line, format!("non-numeric value '{cell}' in column {j}"))
                })?;
                if !v.is_finite() {
                    return Err(parse_err(
                        line,
                        format!("non-finite value '{cell}' in column {j}"),
                    ));
                }
                data.push(v);
            }
        }
    }
    let w = width.ok_or_else(|| Error::Data(format!("{}: no data rows", path.display())))?;
    let x = DenseMatrix::from_vec(y.len(), w - 1, data)?;
    Dataset::new(x, y, labels.clone())
}

/// Writes features followed by the label name in the last column.
pub fn write_csv(data: &Dataset, path: &Path, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    if header {
        let mut names: Vec<String> = (0..data.dim()).map(|j| format!("x{}", j + 1)).collect();
        names.push("label".into());
        w.write_record(&names).map_err(io)?;
    }
    for i in 0..data.len() {
        let mut row: Vec<String> = data.x().row(i).iter().map(|v| v.to_string()).collect();
        row.push(data.labels().names()[data.y()[i]].clone());
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    write_atomic(path, &bytes)
}
