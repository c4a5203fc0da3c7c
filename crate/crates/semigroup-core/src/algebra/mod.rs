//! Dense complex linear-algebra substrate: matrices, tensor products,
//! partial traces, Hermitian eigendecomposition, LU solves, matrix
//! exponentials, shifted-Sylvester resolvent solves, superoperator
//! matrices, Choi matrices, and trace distance.
//!
//! Everything is immutable after construction and every operation is a pure
//! function, safe to call from concurrent contexts.

pub mod eig;
pub mod expm;
pub mod lu;
pub mod matrix;
pub mod superop;
pub mod sylvester;

pub use eig::{eigh, HermitianEigen};
pub use expm::expm;
pub use lu::{lu_inverse, lu_solve};
pub use matrix::{partial_trace_bath, tensor, ComplexMatrix};
pub use superop::{choi_matrix, choi_min_eigenvalue, trace_distance, SuperoperatorMatrix};
pub use sylvester::{solve_shifted_sylvester, solve_shifted_sylvester_cached, sylvester_residual};
