//! Flat `key = value` run configuration with dotted keys.
//!
//! ```text
//! # comment
//! data.registry = data/registry.txt
//! data.task = monks1
//! model.layers = auto
//! model.features = 64
//! train.epochs = 300
//! run.seed = 0
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataio::{DataFormat, DataSource, LabelColumn, Preprocess, Registry, SplitMode};
use crate::error::{Error, Result};
use crate::network::LossKind;
use crate::optimizer::{AdamConfig, OptimizerKind, TrainConfig};
use crate::rff_layer::DEFAULT_INIT_STDDEV;

pub const DEFAULT_FEATURES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub registry: Option<PathBuf>,
    pub task: Option<String>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: DataFormat,
    pub label: LabelColumn,
    pub header: bool,
    pub split: Option<SplitMode>,
    pub preprocess: Preprocess,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            registry: None,
            task: None,
            train: None,
            test: None,
            format: DataFormat::Csv,
            label: LabelColumn::Last,
            header: false,
            split: None,
            preprocess: Preprocess::default(),
        }
    }
}

impl DataConfig {
    /// Name used in summaries: the task name or the training file stem.
    pub fn name(&self) -> String {
        if let Some(t) = &self.task {
            return t.clone();
        }
        self.train
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    }

    pub fn source(&self) -> Result<DataSource> {
        if let Some(task) = &self.task {
            let reg = self
                .registry
                .as_ref()
                .ok_or_else(|| Error::Config("data.task needs data.registry".into()))?;
            return Ok(Registry::load(reg)?.get(task)?.source.clone());
        }
        let train = self
            .train
            .clone()
            .ok_or_else(|| Error::Config("no dataset: set data.task or data.train".into()))?;
        let split = self.split.unwrap_or(if self.test.is_some() {
            SplitMode::Provided
        } else {
            SplitMode::RandomHalf
        });
        if split == SplitMode::Provided && self.test.is_none() {
            return Err(Error::Config(
                "data.split = provided needs data.test".into(),
            ));
        }
        Ok(DataSource {
            format: self.format,
            train,
            test: self.test.clone(),
            label: self.label,
            header: self.header,
            split,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// `None` means `⌈n_train/1000⌉ + 1`.
    pub layers: Option<usize>,
    /// One entry repeats for every layer; otherwise one entry per layer.
    pub features: Vec<usize>,
    pub batchnorm: bool,
    /// `None` picks squared hinge for two classes and cross entropy otherwise.
    pub loss: Option<LossKind>,
    pub init_stddev: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: Some(2),
            features: vec![DEFAULT_FEATURES],
            batchnorm: false,
            loss: None,
            init_stddev: DEFAULT_INIT_STDDEV,
        }
    }
}

impl ModelConfig {
    pub fn features_for(&self, layers: usize) -> Result<Vec<usize>> {
        match self.features.len() {
            1 => Ok(vec![self.features[0]; layers]),
            n if n == layers => Ok(self.features.clone()),
            n => Err(Error::Config(format!(
                "model.features lists {n} widths for {layers} layers"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
            trials: 1,
            out: PathBuf::from("runs/latest"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true/false, got '{v}'"
        ))),
    }
}

fn auto_or<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies a file of `key = value` lines; relative paths resolve
    /// against the file's directory.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    i + 1
                ))
            })?;
            self.set_with_base(k.trim(), v.trim(), base)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    /// Applies one `key=value` override; paths resolve against the
    /// working directory.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{kv}' is not key=value")))?;
        self.set_with_base(k.trim(), v.trim(), Path::new(""))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_with_base(key, value, Path::new(""))
    }

    fn set_with_base(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let path = || base.join(v);
        match key {
            "data.registry" => self.data.registry = Some(path()),
            "data.task" => self.data.task = Some(v.to_string()),
            "data.train" => self.data.train = Some(path()),
            "data.test" => self.data.test = (!v.is_empty()).then(path),
            "data.format" => self.data.format = v.parse()?,
            "data.label" => self.data.label = v.parse()?,
            "data.header" => self.data.header = parse_bool(key, v)?,
            "data.split" => self.data.split = if v == "auto" { None } else { Some(v.parse()?) },
            "data.preprocess" => self.data.preprocess = v.parse()?,
            "model.layers" => self.model.layers = auto_or(key, v)?,
            "model.features" => {
                self.model.features = v
                    .split(',')
                    .map(|s| parse_num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "model.batchnorm" => self.model.batchnorm = parse_bool(key, v)?,
            "model.loss" => {
                self.model.loss = if v == "auto" {
                    None
                } else {
                    Some(v.parse().map_err(|e: Error| Error::Config(e.to_string()))?)
                }
            }
            "model.init_stddev" => self.model.init_stddev = parse_num(key, v)?,
            "train.epochs" => self.train.epochs = parse_num(key, v)?,
            "train.batch_size" => self.train.batch_size = auto_or(key, v)?,
            "train.lambda" => self.train.lambda = parse_num(key, v)?,
            "train.lr" => self.train.lr = parse_num(key, v)?,
            "train.lr_schedule" => {
                self.train.lr_schedule = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|item| {
                        let (e, lr) = item.split_once(':').ok_or_else(|| {
                            Error::Config(format!("{key}: expected epoch:lr, got '{item}'"))
                        })?;
                        Ok((parse_num(key, e)?, parse_num(key, lr)?))
                    })
                    .collect::<Result<_>>()?
            }
            "train.shuffle" => self.train.shuffle = parse_bool(key, v)?,
            "train.optimizer" => {
                self.train.optimizer = match v {
                    "adam" => OptimizerKind::Adam(self.adam_config()),
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err(Error::Config(format!("{key}: unknown optimizer '{v}'"))),
                }
            }
            "train.beta1" | "train.beta2" | "train.epsilon" => {
                let mut cfg = self.adam_config();
                let x = parse_num(key, v)?;
                match key {
                    "train.beta1" => cfg.beta1 = x,
                    "train.beta2" => cfg.beta2 = x,
                    _ => cfg.epsilon = x,
                }
                self.train.optimizer = OptimizerKind::Adam(cfg);
            }
            "run.seed" => self.seed = parse_num(key, v)?,
            "run.trials" => self.trials = parse_num(key, v)?,
            "run.out" => self.out = path(),
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    fn adam_config(&self) -> AdamConfig {
        match self.train.optimizer {
            OptimizerKind::Adam(c) => c,
            OptimizerKind::Sgd => AdamConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("run.trials must be at least 1".into()));
        }
        if self.model.layers == Some(0) {
            return Err(Error::Config("model.layers must be at least 1".into()));
        }
        if self.model.features.is_empty() || self.model.features.contains(&0) {
            return Err(Error::Config("model.features must be positive".into()));
        }
        if self.train.batch_size == Some(0) {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if self.train.lambda.is_nan()
            || self.train.lambda < 0.0
            || self.train.lr.is_nan()
            || self.train.lr < 0.0
        {
            return Err(Error::Config(
                "train.lambda and train.lr must be non-negative".into(),
            ));
        }
        if self.model.init_stddev.is_nan() || self.model.init_stddev < 0.0 {
            return Err(Error::Config(
                "model.init_stddev must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Every key, in a form [`apply_file`](Self::apply_file) reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| absolute(p).display().to_string());
        if let Some(r) = p(&self.data.registry) {
            kv("data.registry", r);
        }
        if let Some(t) = &self.data.task {
            kv("data.task", t.clone());
        }
        if let Some(t) = p(&self.data.train) {
            kv("data.train", t);
        }
        if let Some(t) = p(&self.data.test) {
            kv("data.test", t);
        }
        kv("data.format", self.data.format.to_string());
        kv(
            "data.label",
            match self.data.label {
                LabelColumn::Last => "last".into(),
                LabelColumn::Index(i) => i.to_string(),
            },
        );
        kv("data.header", self.data.header.to_string());
        kv(
            "data.split",
            self.data.split.map_or("auto".into(), |s| s.to_string()),
        );
        kv("data.preprocess", self.data.preprocess.to_string());
        kv(
            "model.layers",
            self.model.layers.map_or("auto".into(), |l| l.to_string()),
        );
        kv("model.features", join(&self.model.features));
        kv("model.batchnorm", self.model.batchnorm.to_string());
        kv(
            "model.loss",
            self.model.loss.map_or("auto".into(), |l| l.to_string()),
        );
        kv("model.init_stddev", self.model.init_stddev.to_string());
        kv("train.epochs", self.train.epochs.to_string());
        kv(
            "train.batch_size",
            self.train
                .batch_size
                .map_or("auto".into(), |b| b.to_string()),
        );
        kv("train.lambda", self.train.lambda.to_string());
        kv("train.lr", self.train.lr.to_string());
        let sched: Vec<String> = self
            .train
            .lr_schedule
            .iter()
            .map(|(e, lr)| format!("{e}:{lr}"))
            .collect();
        kv("train.lr_schedule", sched.join(","));
        kv("train.shuffle", self.train.shuffle.to_string());
        match self.train.optimizer {
            OptimizerKind::Adam(c) => {
                kv("train.optimizer", "adam".into());
                kv("train.beta1", c.beta1.to_string());
                kv("train.beta2", c.beta2.to_string());
                kv("train.epsilon", c.epsilon.to_string());
            }
            OptimizerKind::Sgd => kv("train.optimizer", "sgd".into()),
        }
        kv("run.seed", self.seed.to_string());
        kv("run.trials", self.trials.to_string());
        kv("run.out", absolute(&self.out).display().to_string());
        out
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        for kv in [
            "data.train=/tmp/a.csv",
            "data.header=true",
            "model.layers=auto",
            "model.features=32,16",
            "model.loss=cross_entropy",
            "train.lr_schedule=100:0.0001,200:0.00001",
            "train.beta1=0.8",
            "train.batch_size=16",
            "run.trials=3",
            "run.out=/tmp/out",
        ] {
            c.apply_override(kv).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.txt");
        std::fs::write(&path, c.to_text()).unwrap();
        let mut back = RunConfig::default();
        back.apply_file(&path).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_keys_and_values() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("model.depth", "3"), Err(Error::Config(_))));
        assert!(matches!(
            c.set("train.epochs", "many"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            c.apply_override("train.epochs"),
            Err(Error::Config(_))
        ));
        c.set("run.trials", "0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn features_expand() {
        let m = ModelConfig::default();
        assert_eq!(m.features_for(3).unwrap(), vec![DEFAULT_FEATURES; 3]);
        let m = ModelConfig {
            features: vec![8, 4],
            ..ModelConfig::default()
        };
        assert!(m.features_for(3).is_err());
    }
}
