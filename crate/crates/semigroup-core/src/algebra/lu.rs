//! Dense LU factorization with partial pivoting, used for linear solves in
//! the matrix exponential's rational kernel and for the dense resolvent
//! oracles in tests.

use num_complex::Complex64;

use crate::algebra::matrix::ComplexMatrix;
use crate::error::CoreError;
use crate::Result;

/// Relative pivot floor: a pivot below this times the matrix one-norm means
/// the system is singular to working precision.
const PIVOT_RTOL: f64 = 1e-14;

/// Solve `A X = B` for `X` by LU with partial pivoting.
///
/// Errors with a conditioning failure when a pivot falls below the relative
/// floor (singular or near-singular system).
pub fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    assert!(a.is_square(), "lu_solve expects a square system");
    assert_eq!(a.rows(), b.rows(), "right-hand side height mismatch");
    let n = a.rows();
    let m = b.cols();
    let floor = PIVOT_RTOL * a.one_norm().max(f64::MIN_POSITIVE);

    // Working copies: `lu` holds the factors in place, `x` the solutions.
    let mut lu = a.clone();
    let mut x = b.clone();

    for k in 0..n {
        // Partial pivot: swap in the row with the largest column entry.
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].norm();
        for i in k + 1..n {
            let mag = lu[(i, k)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag <= floor {
            return Err(CoreError::Conditioning(format!(
                "singular linear system: pivot {pivot_mag:.3e} at column {k} below floor {floor:.3e}"
            )));
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            for j in 0..m {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(pivot_row, j)];
                x[(pivot_row, j)] = tmp;
            }
        }
        // Eliminate below the pivot.
        let inv_piv = Complex64::new(1.0, 0.0) / lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] * inv_piv;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            lu[(i, k)] = factor;
            for j in k + 1..n {
                let v = lu[(i, j)] - factor * lu[(k, j)];
                lu[(i, j)] = v;
            }
            for j in 0..m {
                let v = x[(i, j)] - factor * x[(k, j)];
                x[(i, j)] = v;
            }
        }
    }

    // Back substitution.
    for j in 0..m {
        for ik in (0..n).rev() {
            let mut acc = x[(ik, j)];
            for kk in ik + 1..n {
                acc -= lu[(ik, kk)] * x[(kk, j)];
            }
            x[(ik, j)] = acc / lu[(ik, ik)];
        }
    }
    Ok(x)
}

/// Matrix inverse via [`lu_solve`] against the identity.
pub fn lu_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    lu_solve(a, &ComplexMatrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_fixed_system() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, -1.0), c(0.3, 0.0)],
            vec![c(1.0, 0.0), c(3.0, 0.0), c(-0.5, 0.2)],
            vec![c(0.0, 0.5), c(0.7, -0.7), c(4.0, 0.0)],
        ]);
        let x_true = ComplexMatrix::from_rows(&[
            vec![c(1.0, -1.0)],
            vec![c(0.5, 0.5)],
            vec![c(-2.0, 0.1)],
        ]);
        let b = &a * &x_true;
        let x = lu_solve(&a, &b).unwrap();
        assert!(x.max_abs_diff(&x_true) < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let a = ComplexMatrix::from_fn(8, 8, |i, j| {
            c(((i * 3 + j) as f64 * 0.61).sin(), ((i + j * 5) as f64 * 0.29).cos())
        });
        let a = &a + &ComplexMatrix::identity(8).scale_re(6.0); // well conditioned
        let inv = lu_inverse(&a).unwrap();
        let prod = &a * &inv;
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-11);
    }

    #[test]
    fn singular_system_is_refused() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        let b = ComplexMatrix::zeros(2, 1);
        assert!(matches!(lu_solve(&a, &b), Err(CoreError::Conditioning(_))));
    }
}
