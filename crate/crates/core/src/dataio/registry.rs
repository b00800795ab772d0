//! Task manifest: one task per line, `name key=value ...`.
//!
//! ```text
//! # name    keys
//! monks1    format=csv train=monks-1.train.csv test=monks-1.test.csv label=last header=true split=provided
//! eeg       format=csv train=eeg.csv label=last header=false split=random_half
//! phishing  format=libsvm train=phishing split=random_half
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{
    load_csv_with_labels, load_libsvm_with_labels, split, CsvOptions, Dataset, LabelColumn,
    LabelMap, SplitMode, SplitSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Libsvm,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(DataFormat::Csv),
            "libsvm" | "svmlight" => Ok(DataFormat::Libsvm),
            other => Err(Error::Config(format!("unknown data format '{other}'"))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Csv => "csv",
            DataFormat::Libsvm => "libsvm",
        })
    }
}

/// Where a task's data lives and how to read and split it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSource {
    pub format: DataFormat,
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub label: LabelColumn,
    pub header: bool,
    pub split: SplitMode,
}

impl DataSource {
    fn read(&self, path: &Path, labels: &mut LabelMap) -> Result<Dataset> {
        match self.format {
            DataFormat::Csv => load_csv_with_labels(
                path,
                CsvOptions {
                    label_column: self.label,
                    has_header: self.header,
                },
                labels,
            ),
            DataFormat::Libsvm => load_libsvm_with_labels(path, labels),
        }
    }

    /// Raw (unnormalized) train and test sets. `seed` drives random splits.
    pub fn load(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        let mut labels = LabelMap::new();
        match self.split {
            SplitMode::Provided => {
                let test_path = self
                    .test
                    .as_ref()
                    .ok_or_else(|| Error::Config("split=provided needs a test file".into()))?;
                let train = self.read(&self.train, &mut labels)?;
                let test = self.read(test_path, &mut labels)?;
                let d = train.dim().max(test.dim());
                let train = train.adopt_labels(&labels)?.pad_features(d)?;
                let test = test.adopt_labels(&labels)?.pad_features(d)?;
                let test = test.adopt_stats(train.stats())?;
                Ok((train, test))
            }
            SplitMode::RandomHalf => {
                let all = self.read(&self.train, &mut labels)?;
                split(
                    &all,
                    SplitSpec {
                        mode: SplitMode::RandomHalf,
                        seed,
                    },
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskEntry {
    pub name: String,
    pub source: DataSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    entries: Vec<TaskEntry>,
}

impl Registry {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, path)
    }

    pub fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let name = tokens.next().unwrap_or_default().to_string();
            let mut format = DataFormat::Csv;
            let mut train = None;
            let mut test = None;
            let mut label = LabelColumn::Last;
            let mut header = false;
            let mut split = None;
            for tok in tokens {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| err(i + 1, format!("expected key=value, found '{tok}'")))?;
                let wrap = |e: Error| err(i + 1, e.to_string());
                match k {
                    "format" => format = v.parse().map_err(wrap)?,
                    "train" | "path" => train = Some(base.join(v)),
                    "test" => test = Some(base.join(v)),
                    "label" => label = v.parse().map_err(wrap)?,
                    "header" => {
                        header = v.parse().map_err(|_| {
                            err(i + 1, format!("header must be true/false, got '{v}'"))
                        })?
                    }
                    "split" => split = Some(v.parse().map_err(wrap)?),
                    other => return Err(err(i + 1, format!("unknown key '{other}'"))),
                }
            }
            let train = train.ok_or_else(|| err(i + 1, format!("task '{name}' has no train=")))?;
            let split = split.unwrap_or(if test.is_some() {
                SplitMode::Provided
            } else {
                SplitMode::RandomHalf
            });
            if split == SplitMode::Provided && test.is_none() {
                return Err(err(
                    i + 1,
                    format!("task '{name}' uses split=provided without test="),
                ));
            }
            if entries.iter().any(|e: &TaskEntry| e.name == name) {
                return Err(err(i + 1, format!("duplicate task '{name}'")));
            }
            entries.push(TaskEntry {
                name,
                source: DataSource {
                    format,
                    train,
                    test,
                    label,
                    header,
                    split,
                },
            });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, name: &str) -> Result<&TaskEntry> {
        self.entries.iter().find(|e| e.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.entries.iter().map(|e| e.name.as_str()).collect();
            Error::Config(format!(
                "unknown task '{name}' (known: {})",
                known.join(", ")
            ))
        })
    }

    pub fn entries(&self) -> &[TaskEntry] {
        &self.entries
    }
}
