//! Dataset loading, normalization, splitting and the task registry.

mod csv_format;
mod dataset;
mod libsvm;
pub mod monks;
mod registry;
mod split;
mod transform;

pub use csv_format::{load_csv, load_csv_with_labels, write_csv, CsvOptions, LabelColumn};
pub use dataset::{Dataset, FeatureStats, LabelMap};
pub use libsvm::{load_libsvm, load_libsvm_with_labels};
pub use registry::{DataFormat, DataSource, Registry, TaskEntry};
pub use split::{random_half_indices, split, SplitMode, SplitSpec};
pub use transform::{normalize_minmax, whiten, Preprocess, STD_FLOOR};
