//! Dense linear algebra, portable random numbers and a symmetric eigensolver.

mod eigen;
mod matrix;
mod rng;

pub use eigen::{sym_eig, sym_eig_topk, SymEigen};
pub use matrix::{dot, DenseMatrix};
pub use rng::{gaussian_matrix, Rng};
