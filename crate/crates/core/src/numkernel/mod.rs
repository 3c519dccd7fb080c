//! Scalar arithmetic at selectable precision and the small dense kernels the
//! rest of the crate is built on.

mod linalg;
mod matrix;
mod poly;
mod real;
mod special;

use thiserror::Error;

pub use linalg::{
    condition_number_one, eig_small, inverse, least_squares, solve_linear, svd, symmetric_eigen,
    tridiagonal_eigen, Complex, Lu, Svd, SymmetricEigen,
};
pub use matrix::{Matrix, Vector};
pub use poly::Polynomial;
pub use real::{max_abs, sum, Mp, Mp100, Mp32, Real};
pub use special::{dilog, dilog_exp_neg};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular to working precision (pivot {pivot:e} in column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("{routine} did not converge within {limit} iterations")]
    NoConvergence { routine: &'static str, limit: usize },
    #[error("least-squares matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("{value} is outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("cannot parse '{0}' as a decimal number")]
    Parse(String),
}
