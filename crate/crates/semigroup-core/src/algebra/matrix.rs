//! Dense complex matrices with row-major storage.
//!
//! The single concrete matrix type used throughout the crate. Kets are
//! column matrices (`cols == 1`); there is no separate vector type. Shape
//! mismatches in internal arithmetic are programmer errors and panic;
//! operations with user-facing failure modes return `Result` and live in
//! the sibling modules.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build entrywise from a closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested row slices; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Diagonal matrix from complex entries.
    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(e, 0.0);
        }
        m
    }

    /// Column ket from complex amplitudes.
    pub fn ket(amplitudes: &[Complex64]) -> Self {
        Self {
            rows: amplitudes.len(),
            cols: 1,
            data: amplitudes.to_vec(),
        }
    }

    /// Standard basis ket `|index>` in dimension `dim`.
    pub fn basis_ket(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut k = Self::zeros(dim, 1);
        k[(index, 0)] = Complex64::new(1.0, 0.0);
        k
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Raw row-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Transpose without conjugation.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    /// Multiply every entry by a complex scalar.
    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// Multiply every entry by a real scalar.
    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Sum of diagonal entries; panics on non-square input.
    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Induced one-norm (largest column sum of moduli).
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Hermitian part `(M + M^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian part of non-square matrix");
        (&(self + &self.adjoint())).scale_re(0.5)
    }

    /// Max-norm Hermiticity defect `max |M - M^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square(), "hermiticity of non-square matrix");
        (self - &self.adjoint()).max_norm()
    }

    /// Check Hermiticity against an explicit tolerance.
    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tolerance
    }

    /// Error unless the matrix is Hermitian within `tolerance`.
    pub fn require_hermitian(&self, context: &str, tolerance: f64) -> Result<()> {
        if !self.is_square() {
            return Err(CoreError::Dimension {
                context: context.to_string(),
                got: format!("{}x{}", self.rows, self.cols),
                expected: "square".to_string(),
            });
        }
        let defect = self.hermiticity_defect();
        if defect > tolerance {
            return Err(CoreError::NonHermitian {
                context: context.to_string(),
                defect,
                tol: tolerance,
            });
        }
        Ok(())
    }

    /// All entries finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Largest entrywise modulus of `self - other`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        (self - other).max_norm()
    }

    /// Squared two-norm of a ket (or Frobenius norm squared in general).
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Inner product `<self|other>` between two kets of equal length.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, 1, "inner product expects kets");
        assert_eq!(other.cols, 1, "inner product expects kets");
        assert_eq!(self.rows, other.rows, "ket length mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Rank-one projector `|self><self|` from a ket.
    pub fn dyad(&self) -> Self {
        assert_eq!(self.cols, 1, "dyad expects a ket");
        Self::from_fn(self.rows, self.rows, |i, j| self[(i, 0)] * self[(j, 0)].conj())
    }

    /// Return the ket scaled to unit norm; error when the norm is zero.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n <= 0.0 {
            return Err(CoreError::Domain("cannot normalize a zero vector".to_string()));
        }
        Ok(self.scale_re(1.0 / n))
    }

    /// Column `j` as a ket.
    pub fn column(&self, j: usize) -> Self {
        assert!(j < self.cols, "column index out of range");
        Self::from_fn(self.rows, 1, |i, _| self[(i, j)])
    }

    /// Overwrite column `j` with the entries of `ket`.
    pub fn set_column(&mut self, j: usize, ket: &Self) {
        assert!(j < self.cols && ket.cols == 1 && ket.rows == self.rows);
        for i in 0..self.rows {
            self[(i, j)] = ket[(i, 0)];
        }
    }

    /// Column-stack into a `(rows * cols) x 1` ket: `out[i + j * rows] = M[i, j]`.
    pub fn to_stacked(&self) -> Self {
        let mut v = Self::zeros(self.rows * self.cols, 1);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v[(i + j * self.rows, 0)] = self[(i, j)];
            }
        }
        v
    }

    /// Inverse of [`Self::to_stacked`] for the given target shape.
    pub fn from_stacked(stacked: &Self, rows: usize, cols: usize) -> Self {
        assert_eq!(stacked.cols, 1, "stacked input must be a column");
        assert_eq!(stacked.rows, rows * cols, "stacked length mismatch");
        Self::from_fn(rows, cols, |i, j| stacked[(i + j * rows, 0)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols, "index out of range");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols, "index out of range");
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_re(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch in mul");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out[(i, j)] + aik * rhs[(k, j)];
                    out[(i, j)] = v;
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                let e = self[(i, j)];
                write!(f, " {:+.6e}{:+.6e}i", e.re, e.im)?;
            }
            writeln!(f, " ]")?;
        }
        write!(f, "]")
    }
}

/// Kronecker product with the row-major block convention:
/// `out[(i_a * rows_b + i_b), (j_a * cols_b + j_b)] = a[i_a, j_a] * b[i_b, j_b]`.
///
/// Errors when either output dimension exceeds [`tol::MAX_TENSOR_DIM`].
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let dim = rows.max(cols);
    if dim > tol::MAX_TENSOR_DIM {
        return Err(CoreError::Size {
            context: "tensor product".to_string(),
            dim,
            cap: tol::MAX_TENSOR_DIM,
        });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a[(ia, ja)];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Trace out the bath factor of a micro-first composite operator:
/// `out[g, f] = sum_beta rho[(g * d_b + beta), (f * d_b + beta)]`.
///
/// Errors when the input is not square of dimension `d_s * d_b`.
pub fn partial_trace_bath(rho_full: &ComplexMatrix, d_s: usize, d_b: usize) -> Result<ComplexMatrix> {
    let n = d_s * d_b;
    if rho_full.rows() != n || rho_full.cols() != n {
        return Err(CoreError::Dimension {
            context: "partial_trace_bath".to_string(),
            got: format!("{}x{}", rho_full.rows(), rho_full.cols()),
            expected: format!("{n}x{n} (d_s = {d_s}, d_b = {d_b})"),
        });
    }
    let mut out = ComplexMatrix::zeros(d_s, d_s);
    for g in 0..d_s {
        for f in 0..d_s {
            let mut acc = Complex64::new(0.0, 0.0);
            for beta in 0..d_b {
                acc += rho_full[(g * d_b + beta, f * d_b + beta)];
            }
            out[(g, f)] = acc;
        }
    }
    Ok(out)
}
