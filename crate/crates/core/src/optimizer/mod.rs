//! Adam/SGD updates and the minibatch training loop.

mod adam;
mod train;

pub use adam::{
    adam_step, sgd_step, AdamConfig, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON,
    DEFAULT_LR,
};
pub use train::{
    accuracy, epoch_batches, evaluate, fit, EpochRecord, Evaluation, OptimizerKind, TrainConfig,
    TrainingLog, DEFAULT_EPOCHS, DEFAULT_LAMBDA, FULL_BATCH_LIMIT, LARGE_DATA_BATCH,
};
