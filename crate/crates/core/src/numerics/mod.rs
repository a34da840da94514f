//! Dense complex linear algebra used by the recovery pipeline.
//!
//! Everything here is self-contained: a row-major complex matrix, a
//! one-sided Jacobi SVD (rank, minimum-norm least squares), a companion
//! matrix root finder built on shifted Hessenberg QR, and a Padé
//! scaling-and-squaring matrix exponential.

mod expm;
mod matrix;
mod poly;
mod svd;

pub use expm::matrix_exponential;
pub use matrix::{lu_solve, ComplexMatrix};
pub use poly::{hessenberg_eigenvalues, polynomial_roots, ComplexPolynomial, ROOT_EVAL_TOL};
pub use svd::{least_squares_solve, least_squares_solve_with, numerical_rank, singular_values, svd, Svd};

pub use num_complex::Complex64 as C64;

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest modulus in a complex vector (0 for an empty one).
pub fn max_modulus(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
