//! Self-contained numerical kernels shared by the rest of the crate:
//! dense matrices, simplex projection, truncated SVD, optimal linear
//! assignment, and k-means.
//!
//! Everything here is a pure function of its inputs; the only source of
//! randomness is a caller-provided seed.

mod assignment;
mod kmeans;
mod matrix;
mod simplex;
mod svd;

pub use assignment::{linear_assignment_max, AssignmentResult};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit};
pub use matrix::DenseMatrix;
pub use simplex::project_simplex;
pub use svd::{truncated_svd, Svd};

pub(crate) use matrix::{cholesky_solve, complete_orthonormal_rows};

/// Frobenius norm of the Kronecker product of two square matrices,
/// computed as `||S1||_F * ||S2||_F` without materializing the
/// `m^2 x m^2` product.
pub fn kron_frobenius_norm(s1: &DenseMatrix, s2: &DenseMatrix) -> crate::Result<f64> {
    if s1.rows() != s1.cols() {
        return Err(crate::Error::shape(
            "kron_frobenius_norm",
            "square matrix",
            format!("{}x{}", s1.rows(), s1.cols()),
        ));
    }
    if s2.rows() != s2.cols() {
        return Err(crate::Error::shape(
            "kron_frobenius_norm",
            "square matrix",
            format!("{}x{}", s2.rows(), s2.cols()),
        ));
    }
    Ok(s1.frobenius_norm() * s2.frobenius_norm())
}
