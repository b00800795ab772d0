use std::fmt::Write as _;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::network::{argmax_rows, Network};
use crate::numerics::{DenseMatrix, Rng};

use super::adam::{adam_step, sgd_step, AdamConfig, AdamState, DEFAULT_LR};

pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const DEFAULT_EPOCHS: usize = 300;
pub const LARGE_DATA_BATCH: usize = 256;
/// Datasets up to this size train full-batch when no batch size is given.
pub const FULL_BATCH_LIMIT: usize = 1000;

/// Rows per chunk when evaluating a whole dataset.
const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam(AdamConfig),
    Sgd,
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam(AdamConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` picks full batch for small data and 256 otherwise.
    pub batch_size: Option<usize>,
    pub lambda: f64,
    pub seed: u64,
    pub lr: f64,
    /// `(epoch, lr)` pairs; from epoch `e` (0-based) on, the last pair with
    /// `epoch <= e` sets the rate.
    pub lr_schedule: Vec<(usize, f64)>,
    pub shuffle: bool,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            batch_size: None,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            lr: DEFAULT_LR,
            lr_schedule: Vec::new(),
            shuffle: true,
            optimizer: OptimizerKind::default(),
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule
            .iter()
            .filter(|(e, _)| *e <= epoch)
            .max_by_key(|(e, _)| *e)
            .map_or(self.lr, |&(_, lr)| lr)
    }

    pub fn effective_batch_size(&self, n: usize) -> usize {
        match self.batch_size {
            Some(b) => b,
            None if n <= FULL_BATCH_LIMIT => n,
            None => LARGE_DATA_BATCH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    /// Objective (data + regularization) over the full training set.
    pub loss: f64,
    pub reg_loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub const HEADER: &'static str = "epoch,lr,loss,reg_loss,train_acc,val_acc";

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// CSV with a header line; an empty `val_acc` means no validation set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.records {
            let val = r.val_acc.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.lr, r.loss, r.reg_loss, r.train_acc, val
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(Self::HEADER) {
            return Err(Error::Data("training log is missing its header".into()));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Data(format!("training log line {}: malformed record", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            records.push(EpochRecord {
                epoch: f[0].parse().map_err(|_| bad())?,
                lr: num(f[1])?,
                loss: num(f[2])?,
                reg_loss: num(f[3])?,
                train_acc: num(f[4])?,
                val_acc: if f[5].is_empty() {
                    None
                } else {
                    Some(num(f[5])?)
                },
            });
        }
        Ok(Self { records })
    }
}

/// Loss and accuracy of `net` on a whole dataset, in inference mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub data_loss: f64,
    pub reg_loss: f64,
    pub accuracy: f64,
}

pub fn evaluate(net: &Network, data: &Dataset, lambda: f64) -> Result<Evaluation> {
    let n = data.len();
    let mut weighted_loss = 0.0;
    let mut correct = 0usize;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let x = data.x().select_rows(&idx);
        let logits = net.logits(&x)?;
        let (report, _) = net.compute_loss(&logits, &data.y()[start..end], 0.0)?;
        weighted_loss += report.data_loss * (end - start) as f64;
        correct += report.correct_count;
        start = end;
    }
    Ok(Evaluation {
        data_loss: weighted_loss / n as f64,
        reg_loss: 0.5 * lambda * net.param_sq_norm(),
        accuracy: correct as f64 / n as f64,
    })
}

/// Accuracy of `predict` against the labels.
pub fn accuracy(net: &Network, data: &Dataset) -> Result<f64> {
    let logits = net.logits(data.x())?;
    let pred = argmax_rows(&logits);
    let correct = pred.iter().zip(data.y()).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / data.len() as f64)
}

/// Minibatch index groups for one epoch.
///
/// The permutation depends only on `(seed, epoch)`. A trailing batch of one
/// sample is folded into the previous batch when batch norm needs `>= 2`.
pub fn epoch_batches(
    n: usize,
    batch_size: usize,
    seed: u64,
    epoch: usize,
    shuffle: bool,
    min_batch: usize,
) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    if shuffle {
        Rng::derived(seed, epoch as u64).shuffle(&mut idx);
    }
    let mut batches: Vec<Vec<usize>> = idx
        .chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect();
    if batches.len() >= 2 && batches.last().is_some_and(|b| b.len() < min_batch) {
        let tail = batches.pop().unwrap_or_default();
        if let Some(prev) = batches.last_mut() {
            prev.extend(tail);
        }
    }
    batches
}

/// Trains `net` in place with shuffled minibatches and logs every epoch.
///
/// The network after the last epoch is the result; there is no early
/// stopping. A non-finite loss or parameter aborts with [`Error::Numeric`].
pub fn fit(
    net: &mut Network,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainingLog> {
    if train.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    if train.dim() != net.d_in() {
        return Err(Error::Data(format!(
            "dataset has {} features, network expects {}",
            train.dim(),
            net.d_in()
        )));
    }
    if train.class_count() > net.classes() {
        return Err(Error::Data(format!(
            "dataset has {} classes, network has {} outputs",
            train.class_count(),
            net.classes()
        )));
    }
    let n = train.len();
    let batch_size = config.effective_batch_size(n);
    let min_batch = if net.has_batchnorm() { 2 } else { 1 };
    if batch_size < min_batch || n < min_batch {
        return Err(Error::Parameter(format!(
            "batch size {batch_size} (n = {n}) too small; batch norm needs at least 2 samples"
        )));
    }

    let block_lens: Vec<usize> = net.params().iter().map(|b| b.len()).collect();
    let mut adam = match config.optimizer {
        OptimizerKind::Adam(cfg) => Some(AdamState::new(&block_lens, config.lr, cfg)?),
        OptimizerKind::Sgd => None,
    };

    let mut log = TrainingLog::default();
    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        for batch in epoch_batches(n, batch_size, config.seed, epoch, config.shuffle, min_batch) {
            let xb: DenseMatrix = train.x().select_rows(&batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train.y()[i]).collect();
            let trace = net.forward_full(&xb, true)?;
            let (report, grad_logits) = net.compute_loss(&trace.logits, &yb, config.lambda)?;
            if !report.total.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {}",
                    epoch + 1
                )));
            }
            let grads = net.backward_full(&trace, &grad_logits, config.lambda)?;
            net.update_running_stats(&trace);
            let g = grads.blocks();
            let mut p = net.params_mut();
            match adam.as_mut() {
                Some(state) => {
                    state.lr = lr;
                    adam_step(&mut p, &g, state)?;
                }
                None => sgd_step(&mut p, &g, lr)?,
            }
        }
        if !net.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite parameters after epoch {}",
                epoch + 1
            )));
        }
        let eval = evaluate(net, train, config.lambda)?;
        let val_acc = validation.map(|v| accuracy(net, v)).transpose()?;
        log.records.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            loss: eval.data_loss + eval.reg_loss,
            reg_loss: eval.reg_loss,
            train_acc: eval.accuracy,
            val_acc,
        });
    }
    Ok(log)
}
