//! Superoperator matrices on column-stacked operators, Choi matrices, and
//! trace distance.
//!
//! A superoperator on `d x d` operators is stored as the `d^2 x d^2` matrix
//! acting on column-stacked operands: `vec(X)[i + j d] = X[i, j]`, so
//! `vec(A X B) = (B^T ⊗ A) vec(X)`. Complete positivity is tested through
//! the Choi matrix `C[(i d + k), (j d + l)] = Phi(E_ij)[k, l]`, which is
//! positive semidefinite exactly when the map is CP.

use num_complex::Complex64;

use crate::algebra::eig::eigh;
use crate::algebra::matrix::{tensor, ComplexMatrix};
use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// Dense superoperator on `d x d` operators.
#[derive(Clone, Debug)]
pub struct SuperoperatorMatrix {
    dim: usize,
    mat: ComplexMatrix,
}

impl SuperoperatorMatrix {
    /// Wrap an explicit `d^2 x d^2` matrix.
    pub fn from_matrix(dim: usize, mat: ComplexMatrix) -> Result<Self> {
        let n = dim * dim;
        if mat.rows() != n || mat.cols() != n {
            return Err(CoreError::Dimension {
                context: "superoperator matrix".to_string(),
                got: format!("{}x{}", mat.rows(), mat.cols()),
                expected: format!("{n}x{n}"),
            });
        }
        if n > tol::MAX_TENSOR_DIM {
            return Err(CoreError::Size {
                context: "superoperator matrix".to_string(),
                dim: n,
                cap: tol::MAX_TENSOR_DIM,
            });
        }
        Ok(Self { dim, mat })
    }

    /// The zero map.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            mat: ComplexMatrix::zeros(dim * dim, dim * dim),
        }
    }

    /// The identity map.
    pub fn identity_map(dim: usize) -> Self {
        Self {
            dim,
            mat: ComplexMatrix::identity(dim * dim),
        }
    }

    /// Map `X -> A X`.
    pub fn left_mult(a: &ComplexMatrix) -> Result<Self> {
        assert!(a.is_square());
        let d = a.rows();
        Ok(Self {
            dim: d,
            mat: tensor(&ComplexMatrix::identity(d), a)?,
        })
    }

    /// Map `X -> X B`.
    pub fn right_mult(b: &ComplexMatrix) -> Result<Self> {
        assert!(b.is_square());
        let d = b.rows();
        Ok(Self {
            dim: d,
            mat: tensor(&b.transpose(), &ComplexMatrix::identity(d))?,
        })
    }

    /// Sandwich map `X -> L X L^dag`.
    pub fn sandwich(l: &ComplexMatrix) -> Result<Self> {
        assert!(l.is_square());
        Ok(Self {
            dim: l.rows(),
            mat: tensor(&l.conj(), l)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Apply to an operator.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((x.rows(), x.cols()), (self.dim, self.dim), "operand shape mismatch");
        let stacked = &self.mat * &x.to_stacked();
        ComplexMatrix::from_stacked(&stacked, self.dim, self.dim)
    }

    /// Pointwise sum of two superoperators on the same space.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimension mismatch");
        Self {
            dim: self.dim,
            mat: &self.mat + &other.mat,
        }
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "superoperator dimension mismatch");
        Self {
            dim: self.dim,
            mat: &self.mat * &other.mat,
        }
    }

    /// Scale by a complex factor.
    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            mat: self.mat.scale(s),
        }
    }
}

/// Choi matrix of a superoperator: `C[(i d + k), (j d + l)] = Phi(E_ij)[k, l]`.
///
/// With column stacking this is a pure index reshuffle of the stored
/// matrix: `Phi(E_ij)[k, l] = S[(k + l d), (i + j d)]`.
pub fn choi_matrix(s: &SuperoperatorMatrix) -> ComplexMatrix {
    let d = s.dim();
    let m = s.matrix();
    ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, k) = (row / d, row % d);
        let (j, l) = (col / d, col % d);
        m[(k + l * d, i + j * d)]
    })
}

/// Smallest eigenvalue of the Hermitized Choi matrix; at or above
/// [`tol::CHOI_CP_FLOOR`] the map counts as completely positive.
pub fn choi_min_eigenvalue(s: &SuperoperatorMatrix) -> Result<f64> {
    let choi = choi_matrix(s).hermitian_part();
    let e = eigh(&choi)?;
    Ok(e.values.first().copied().unwrap_or(0.0))
}

/// Trace distance `(1/2) || a - b ||_1`, computed from the spectrum of the
/// Hermitized difference.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let diff = (a - b).hermitian_part();
    let e = eigh(&diff)?;
    Ok(0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fixed_matrix(d: usize, salt: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(d, d, |i, j| {
            c(
                ((i * 5 + j * 2 + salt) as f64 * 0.41).sin(),
                ((i * 3 + j + salt) as f64 * 0.59).cos(),
            )
        })
    }

    #[test]
    fn sandwich_action_matches_direct_product() {
        let l = fixed_matrix(3, 1);
        let x = fixed_matrix(3, 2);
        let s = SuperoperatorMatrix::sandwich(&l).unwrap();
        let direct = &(&l * &x) * &l.adjoint();
        let relative = s.apply(&x).max_abs_diff(&direct) / direct.max_norm();
        assert!(relative < tol::SUPEROP_ACTION_RTOL);
    }

    #[test]
    fn left_right_multiplication_agree_with_definition() {
        let a = fixed_matrix(3, 3);
        let b = fixed_matrix(3, 4);
        let x = fixed_matrix(3, 5);
        let left = SuperoperatorMatrix::left_mult(&a).unwrap();
        let right = SuperoperatorMatrix::right_mult(&b).unwrap();
        assert!(left.apply(&x).max_abs_diff(&(&a * &x)) < 1e-12);
        assert!(right.apply(&x).max_abs_diff(&(&x * &b)) < 1e-12);
        // Compose: X -> A X B either way around.
        let both = left.compose(&right);
        let direct = &(&a * &x) * &b;
        assert!(both.apply(&x).max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn choi_of_identity_is_scaled_entangled_projector() {
        let d = 3;
        let choi = choi_matrix(&SuperoperatorMatrix::identity_map(d));
        // d * |Omega><Omega| with |Omega> = sum_i |ii> / sqrt(d) has entries
        // 1 at ((i d + i), (j d + j)) and 0 elsewhere.
        let expect = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
            let (i, k) = (row / d, row % d);
            let (j, l) = (col / d, col % d);
            if i == k && j == l {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert_eq!(choi.max_abs_diff(&expect), 0.0);
    }

    #[test]
    fn transpose_map_is_detected_as_non_cp() {
        // The transpose map on d = 2: Phi(E_ij) = E_ji, stored matrix is the
        // swap of stacked indices.
        let d = 2;
        let mat = ComplexMatrix::from_fn(4, 4, |row, col| {
            let (i, j) = (row % d, row / d); // target entry (i, j)
            let (k, l) = (col % d, col / d); // source entry (k, l)
            if i == l && j == k {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let s = SuperoperatorMatrix::from_matrix(d, mat).unwrap();
        let x = fixed_matrix(2, 7);
        assert!(s.apply(&x).max_abs_diff(&x.transpose()) < 1e-15);
        let min_eig = choi_min_eigenvalue(&s).unwrap();
        assert!((min_eig + 1.0).abs() < 1e-12, "expected eigenvalue -1, got {min_eig}");
    }

    #[test]
    fn trace_distance_basics() {
        let p0 = ComplexMatrix::basis_ket(2, 0).dyad();
        let p1 = ComplexMatrix::basis_ket(2, 1).dyad();
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p0, &p0).unwrap() < 1e-15);
        let mixed = ComplexMatrix::identity(2).scale_re(0.5);
        assert!((trace_distance(&p0, &mixed).unwrap() - 0.5).abs() < 1e-14);
    }
}
