//! Dense linear-algebra kernels and correlation statistics.

mod eigen;
mod matrix;
mod stats;
mod svd;

pub use eigen::{cholesky, generalized_symmetric_eig, symmetric_eigen, Eigen};
pub use matrix::DenseMatrix;
pub use stats::{average_ranks, pearson, spearman};
pub use svd::{svd, Svd};
