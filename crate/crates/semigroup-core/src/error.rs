//! Crate-wide error type.
//!
//! Every failure mode the library can diagnose is a variant here, carrying
//! enough context to act on (offending indices, measured defects, the bound
//! that was exceeded). Callers that need process exit codes map variants to
//! codes at the boundary; the library itself never exits or panics on bad
//! user input.

use thiserror::Error;

/// All errors produced by this crate.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Incompatible or non-factorable dimensions.
    #[error("dimension error: {context} (got {got}, expected {expected})")]
    Dimension {
        context: String,
        got: String,
        expected: String,
    },

    /// A tensor or superoperator dimension exceeded the configured cap.
    #[error("size error: {context}: dimension {dim} exceeds cap {cap}")]
    Size {
        context: String,
        dim: usize,
        cap: usize,
    },

    /// A matrix required to be Hermitian is not, within tolerance.
    #[error("non-Hermitian input: {context}: defect {defect:.3e} exceeds {tol:.3e}")]
    NonHermitian {
        context: String,
        defect: f64,
        tol: f64,
    },

    /// A model-level invariant is violated (coupling pairing, state
    /// normalization, weight signs, ...).
    #[error("invalid model: {0}")]
    ModelInvalid(String),

    /// An argument is outside the operation's domain (negative time,
    /// negative absorption, invalid grid, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A resolvent evaluation point collided with the shifted spectrum.
    #[error(
        "resonance error: shift z = {z_re:.6e}{z_im:+.6e}i within {guard:.1e} of \
         i*(lambda - mu) for eigenpair (left #{left_index}: {left_value:.6e}, \
         right #{right_index}: {right_value:.6e})"
    )]
    Resonance {
        z_re: f64,
        z_im: f64,
        left_index: usize,
        left_value: f64,
        right_index: usize,
        right_value: f64,
        guard: f64,
    },

    /// A numerical routine refused an ill-conditioned input (matrix norm
    /// beyond the exponential's cap, singular linear system, ...).
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// An iteration failed to converge within its budget.
    #[error("convergence failure: {context} after {iterations} iterations, residual {residual:.3e}")]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    /// A request whose cost grows combinatorially exceeded its cap.
    #[error("cost error: {context}: requested {requested} exceeds cap {cap}")]
    Cost {
        context: String,
        requested: usize,
        cap: usize,
    },

    /// The coupling strength entering a normalization vanished.
    #[error("degenerate coupling: {context}: weight {value:.3e} at or below floor {floor:.1e}")]
    DegenerateCoupling {
        context: String,
        value: f64,
        floor: f64,
    },

    /// A model declared symmetric fails the symmetry check.
    #[error("symmetry error: {context}: measured defect {defect:.3e} exceeds {tol:.3e}")]
    Symmetry {
        context: String,
        defect: f64,
        tol: f64,
    },
}
