//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Each sweep visits every strict upper-triangle pair `(p, q)` and applies
//! the unitary plane rotation that annihilates the entry, combining a phase
//! with the classic symmetric rotation. Convergence is quadratic; the
//! off-diagonal mass is driven below a relative threshold of the input's
//! Frobenius norm. Results are deterministic: eigenvalues ascend, and each
//! eigenvector's phase makes its first component of modulus above
//! [`crate::tol::PHASE_FIX_FLOOR`] real positive, with exact ties broken by
//! index order (stable sort).

use num_complex::Complex64;

use crate::algebra::matrix::ComplexMatrix;
use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// Eigendecomposition of a Hermitian matrix: `M = V diag(values) V^dag`,
/// columns of `vectors` are orthonormal eigenvectors, values ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Reassemble `V f(diag) V^dag` for a scalar function on the spectrum.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let d = ComplexMatrix::diag(&self.values.iter().map(|&v| f(v)).collect::<Vec<_>>());
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }

    /// Eigenvector `index` as a ket.
    pub fn vector(&self, index: usize) -> ComplexMatrix {
        self.vectors.column(index)
    }
}

const MAX_SWEEPS: usize = 100;
/// Off-diagonal mass threshold relative to the Frobenius norm.
const OFF_DIAG_RTOL: f64 = 1e-14;

/// Eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian within [`tol::HERMITIAN_TOL`] (checked); the
/// iteration then runs on the exactly Hermitized matrix so roundoff in the
/// input cannot leak asymmetry into the result.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    m.require_hermitian("eigh input", tol::HERMITIAN_TOL)?;
    let n = m.rows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }

    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.fro_norm().max(f64::MIN_POSITIVE);
    let stop = OFF_DIAG_RTOL * scale;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= stop {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }
    if !converged && off_diagonal_norm(&a) > stop {
        return Err(CoreError::Convergence {
            context: "Jacobi eigensolver".to_string(),
            iterations: MAX_SWEEPS,
            residual: off_diagonal_norm(&a) / scale,
        });
    }

    // Sort ascending (stable: equal eigenvalues keep sweep order) and fix
    // phases for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).expect("non-finite eigenvalue"));

    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(raw[src]);
        let mut col = v.column(src);
        phase_fix(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Annihilate `a[p, q]` with the unitary plane rotation
/// `U[p,p] = c`, `U[p,q] = s e^{i phi}`, `U[q,p] = -s e^{-i phi}`,
/// `U[q,q] = c`, where `a[p, q] = |a| e^{i phi}`; updates `a <- U^dag a U`
/// and accumulates `v <- v U`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag; // e^{i phi}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = a.rows();
    let upq = phase.scale(s); // s e^{i phi}
    // Columns: (A U) touches columns p and q.
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip.scale(c) - aiq * upq.conj();
        a[(i, q)] = aip * upq + aiq.scale(c);
    }
    // Rows: (U^dag A) touches rows p and q.
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = apj.scale(c) - upq * aqj;
        a[(q, j)] = upq.conj() * apj + aqj.scale(c);
    }
    // Clamp the annihilated pair and enforce real diagonal against roundoff.
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    // Accumulate eigenvectors.
    for i in 0..v.rows() {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip.scale(c) - viq * upq.conj();
        v[(i, q)] = vip * upq + viq.scale(c);
    }
}

fn phase_fix(col: &mut ComplexMatrix) {
    for i in 0..col.rows() {
        let e = col[(i, 0)];
        if e.norm() > tol::PHASE_FIX_FLOOR {
            let rot = e.conj() / e.norm();
            *col = col.scale(rot);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reconstruction_defect(m: &ComplexMatrix, e: &HermitianEigen) -> f64 {
        let rebuilt = e.apply_function(|x| c(x, 0.0));
        m.max_abs_diff(&rebuilt)
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let m = ComplexMatrix::diag_real(&[3.0, -1.0, 2.0]);
        let e = eigh(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        assert!(reconstruction_defect(&m, &e) < 1e-13);
    }

    #[test]
    fn pauli_like_matrix() {
        // [[0, -i], [i, 0]] has eigenvalues -1, +1.
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ]);
        let e = eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!(reconstruction_defect(&m, &e) < 1e-13);
    }

    #[test]
    fn random_hermitian_reconstructs_and_is_orthonormal() {
        let raw = ComplexMatrix::from_fn(9, 9, |i, j| {
            c(
                ((5 * i + 3 * j + 2) as f64).sin(),
                ((i + 11 * j + 7) as f64).cos(),
            )
        });
        let m = raw.hermitian_part();
        let e = eigh(&m).unwrap();
        assert!(reconstruction_defect(&m, &e) < 1e-11 * m.fro_norm().max(1.0));
        let gram = &e.vectors.adjoint() * &e.vectors;
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-12);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let raw = ComplexMatrix::from_fn(6, 6, |i, j| c((i * j + 1) as f64 * 0.21, (i + 2 * j) as f64 * 0.13));
        let m = raw.hermitian_part();
        let e = eigh(&m).unwrap();
        let sum: f64 = e.values.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-11);
    }

    #[test]
    fn phase_convention_is_deterministic() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.5)],
            vec![c(0.0, -0.5), c(2.0, 0.0)],
        ]);
        let e1 = eigh(&m).unwrap();
        let e2 = eigh(&m).unwrap();
        assert_eq!(e1.vectors.max_abs_diff(&e2.vectors), 0.0);
        for k in 0..2 {
            let col = e1.vector(k);
            let lead = (0..2)
                .map(|i| col[(i, 0)])
                .find(|v| v.norm() > tol::PHASE_FIX_FLOOR)
                .unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(matches!(eigh(&m), Err(CoreError::NonHermitian { .. })));
    }
}
