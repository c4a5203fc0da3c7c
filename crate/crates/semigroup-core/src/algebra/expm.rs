//! Matrix exponential by scaling and squaring with a degree-13 diagonal
//! Padé approximant.
//!
//! The input is scaled by a power of two until its one-norm is below the
//! degree-13 switching radius, the rational approximant is evaluated with
//! a single linear solve, and the result is squared back up. Inputs whose
//! one-norm exceeds [`tol::EXPM_NORM_CAP`] are refused: repeated squaring
//! of such matrices amplifies roundoff past any useful accuracy.

use num_complex::Complex64;

use crate::algebra::lu::lu_solve;
use crate::algebra::matrix::ComplexMatrix;
use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// One-norm radius below which the degree-13 approximant meets double
/// precision.
const THETA_13: f64 = 5.371920351148152;

/// Degree-13 Padé numerator coefficients (denominator uses alternating
/// signs on the odd terms).
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential `exp(M)`.
///
/// Errors with a conditioning failure when the one-norm exceeds
/// [`tol::EXPM_NORM_CAP`].
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    assert!(m.is_square(), "expm expects a square matrix");
    let norm = m.one_norm();
    if !norm.is_finite() || norm > tol::EXPM_NORM_CAP {
        return Err(CoreError::Conditioning(format!(
            "matrix exponential refused: one-norm {norm:.3e} exceeds cap {:.1e}",
            tol::EXPM_NORM_CAP
        )));
    }

    let squarings = if norm > THETA_13 {
        ((norm / THETA_13).log2().ceil() as u32).max(1)
    } else {
        0
    };
    let a = m.scale_re(0.5_f64.powi(squarings as i32));

    let n = a.rows();
    let ident = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let b = |k: usize| Complex64::new(PADE_13[k], 0.0);
    // u = A [ A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I ]
    let w1 = &(&a6.scale(b(13)) + &a4.scale(b(11))) + &a2.scale(b(9));
    let w2 = &(&(&a6.scale(b(7)) + &a4.scale(b(5))) + &a2.scale(b(3))) + &ident.scale(b(1));
    let u = &a * &(&(&a6 * &w1) + &w2);
    // v = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let z1 = &(&a6.scale(b(12)) + &a4.scale(b(10))) + &a2.scale(b(8));
    let z2 = &(&(&a6.scale(b(6)) + &a4.scale(b(4))) + &a2.scale(b(2))) + &ident.scale(b(0));
    let v = &(&a6 * &z1) + &z2;

    // exp(A) ~= (V - U)^{-1} (V + U)
    let mut result = lu_solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}
