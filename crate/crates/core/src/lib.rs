pub mod cli;
pub mod dataio;
pub mod error;
pub mod fsutil;
pub mod kernel_analysis;
pub mod network;
pub mod numerics;
pub mod optimizer;
pub mod rff_layer;

pub use error::{Error, Result};
