//! Shifted-Sylvester resolvent solves on sector-crossing operators.
//!
//! The superoperator `z - S` with `S Y = i (h_left Y - Y h_right)` is
//! inverted by transforming `Y` into the eigenbases of the two Hermitian
//! generators: there the action is diagonal with scalar denominators
//! `z - i (lambda_a - mu_b)`, so the solve is two basis changes and one
//! entrywise division. Cost is one matrix multiply pair per call once the
//! eigendecompositions are cached.

use num_complex::Complex64;

use crate::algebra::eig::{eigh, HermitianEigen};
use crate::algebra::matrix::ComplexMatrix;
use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// Solve `z Y - i (h_left Y - Y h_right) = X` for `Y`.
///
/// `h_left` and `h_right` must be Hermitian; `X` and `Y` are rectangular
/// maps with `h_left` acting on the left factor and `h_right` on the right.
/// Errors with a resonance failure when `z` comes within
/// [`tol::RESONANCE_GUARD`] of a point `i (lambda - mu)` of the shifted
/// spectrum, naming the offending eigenpair.
pub fn solve_shifted_sylvester(
    z: Complex64,
    h_left: &ComplexMatrix,
    h_right: &ComplexMatrix,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let left = eigh(h_left)?;
    let right = eigh(h_right)?;
    solve_shifted_sylvester_cached(z, &left, &right, x)
}

/// [`solve_shifted_sylvester`] with the eigendecompositions precomputed.
pub fn solve_shifted_sylvester_cached(
    z: Complex64,
    left: &HermitianEigen,
    right: &HermitianEigen,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    assert_eq!(x.rows(), left.values.len(), "left dimension mismatch");
    assert_eq!(x.cols(), right.values.len(), "right dimension mismatch");

    // Transform into the joint eigenbasis, divide, transform back.
    let x_tilde = &(&left.vectors.adjoint() * x) * &right.vectors;
    let mut y_tilde = ComplexMatrix::zeros(x.rows(), x.cols());
    for a in 0..x.rows() {
        for b in 0..x.cols() {
            let denom = z - Complex64::new(0.0, left.values[a] - right.values[b]);
            if denom.norm() < tol::RESONANCE_GUARD {
                return Err(CoreError::Resonance {
                    z_re: z.re,
                    z_im: z.im,
                    left_index: a,
                    left_value: left.values[a],
                    right_index: b,
                    right_value: right.values[b],
                    guard: tol::RESONANCE_GUARD,
                });
            }
            y_tilde[(a, b)] = x_tilde[(a, b)] / denom;
        }
    }
    Ok(&(&left.vectors * &y_tilde) * &right.vectors.adjoint())
}

/// Residual `|| z Y - i (h_left Y - Y h_right) - X ||_F` of a candidate
/// solution, for verification.
pub fn sylvester_residual(
    z: Complex64,
    h_left: &ComplexMatrix,
    h_right: &ComplexMatrix,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
) -> f64 {
    let action = &y.scale(z) - &(&(h_left * y) - &(y * h_right)).scale(Complex64::new(0.0, 1.0));
    (&action - x).fro_norm()
}
