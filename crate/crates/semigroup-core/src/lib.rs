//! Desk-scale numerical laboratory for dynamical semigroups of a particle
//! coupled to a model many-body environment.
//!
//! The crate builds, from a truncated second-quantized model (one bath, at
//! most one particle), the reduced generator of the particle's dynamics via
//! superoperator scattering theory: a coherent shift `Q`, a loss operator
//! `A`, and a family of weighted jump channels `(pi, L)`. On top of the
//! generator it provides Lindblad-form propagation with complete-positivity
//! and trace diagnostics, the jump-process unraveling (count-resolved
//! subcollections, counting statistics, effects, repreparation), and a small
//! matter-optics scenario (refractive index, which-way interferometer).
//!
//! # Conventions
//!
//! * `hbar = 1` throughout; all energies are dimensionless.
//! * Composite `N = 1` sector indices are micro-first: a state `|f> ⊗ |beta>`
//!   of micro mode `f` and bath level `beta` has flat index `f * d_b + beta`.
//! * Superoperators act on column-stacked matrices: `vec(X)[i + j * rows] =
//!   X[i, j]`, so `vec(A X B) = (B^T ⊗ A) vec(X)`.
//! * Hermitian eigendecompositions order eigenvalues ascending and fix each
//!   eigenvector's phase by making its first component of modulus above
//!   `1e-12` real and positive.
//!
//! All tolerances live in [`tol`] as named constants with their rationale.

pub mod algebra;
pub mod demo;
pub mod error;
pub mod fock;
pub mod generator;
pub mod lindblad;
pub mod optics;
pub mod tmatrix;
pub mod tol;
pub mod unravel;

pub use error::CoreError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
