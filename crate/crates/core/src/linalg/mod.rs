//! Dense linear-algebra kernel.
//!
//! Everything above this module works on small dense systems (at most a few
//! hundred rows), so the kernel is a plain column-major matrix plus a
//! Householder QR with column pivoting. On top of the QR sit least squares,
//! the pseudoinverse, orthogonal projectors, Lawson-Hanson NNLS and
//! least squares with sign constraints on a leading block of coefficients.

mod matrix;
mod nnls;
mod qr;

pub use matrix::{dot, norm2, DenseMatrix};
pub(crate) use matrix::axpy;
pub(crate) use qr::residual_norm as residual_norm_of;
pub use nnls::{lsi_solve, nnls_solve, nnls_solve_with_cap};
pub use qr::{orthogonal_projector, pseudoinverse, solve_ls, ColPivQr, IncrementalQr};

/// Outcome of a (possibly constrained) least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresResult {
    pub solution: Vec<f64>,
    /// `||b - A * solution||_2`
    pub residual_norm: f64,
    pub rank_deficient: bool,
}

/// Default KKT tolerance for a problem with data `A`, `b`: `1e-10 * ||A^T b||_inf`.
pub fn default_kkt_tol(a: &DenseMatrix, b: &[f64]) -> f64 {
    let atb = a.tr_mul_vec(b);
    let scale = atb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (1e-10 * scale).max(f64::MIN_POSITIVE)
}
