//! Truncated second-quantized model: the vacuum (bath-only) and one-particle
//! sectors, and the embedding/reduction between the composite picture and
//! the particle's reduced picture.
//!
//! The full Hamiltonian is `H = H_0 + H_m + V` with `H_0 = sum_f E_f n_f`
//! the particle's mode energies, `H_m` the bath Hamiltonian, and
//! `V = sum_{f,g} a^dag_f a_g ⊗ B_fg` a number-conserving coupling. Since
//! particle number commutes with `H`, only two sectors are ever
//! materialized: `N = 0` (bath alone, dimension `d_b`) and `N = 1`
//! (dimension `d_s * d_b`, micro-first index `f * d_b + beta`). At most one
//! particle exists, so exchange statistics never enters.

use num_complex::Complex64;

use crate::algebra::{eigh, partial_trace_bath, tensor, ComplexMatrix, HermitianEigen};
use crate::error::CoreError;
use crate::tol;
use crate::Result;

/// One coupling term `a^dag_f a_g ⊗ B_fg`.
#[derive(Clone, Debug)]
pub struct CouplingTerm {
    pub f: usize,
    pub g: usize,
    pub b: ComplexMatrix,
}

/// The model: particle mode energies, bath Hamiltonian, coupling terms.
#[derive(Clone, Debug)]
pub struct SystemModel {
    d_s: usize,
    d_b: usize,
    micro_energies: Vec<f64>,
    h_m: ComplexMatrix,
    coupling_terms: Vec<CouplingTerm>,
}

impl SystemModel {
    /// Validate and build a model.
    ///
    /// Checks: dimensions consistent, all entries finite, `h_m` Hermitian,
    /// and the coupling Hermitian as a whole — every term `(f, g)` needs a
    /// partner `(g, f)` with `B_gf = B_fg^dag` entrywise (diagonal terms
    /// must be Hermitian themselves). Violations are reported with the full
    /// list of offending `(f, g)` pairs.
    pub fn new(
        micro_energies: Vec<f64>,
        h_m: ComplexMatrix,
        coupling_terms: Vec<CouplingTerm>,
    ) -> Result<Self> {
        let d_s = micro_energies.len();
        let d_b = h_m.rows();
        if d_s == 0 || d_b == 0 {
            return Err(CoreError::ModelInvalid(
                "micro and bath dimensions must both be positive".to_string(),
            ));
        }
        if micro_energies.iter().any(|e| !e.is_finite()) {
            return Err(CoreError::ModelInvalid("non-finite micro energy".to_string()));
        }
        h_m.require_hermitian("bath Hamiltonian h_m", tol::MODEL_HERMITIAN_TOL)?;

        let mut seen = std::collections::BTreeSet::new();
        for term in &coupling_terms {
            if term.f >= d_s || term.g >= d_s {
                return Err(CoreError::ModelInvalid(format!(
                    "coupling term ({}, {}) outside micro range 0..{}",
                    term.f, term.g, d_s
                )));
            }
            if term.b.rows() != d_b || term.b.cols() != d_b {
                return Err(CoreError::Dimension {
                    context: format!("coupling matrix B_({}, {})", term.f, term.g),
                    got: format!("{}x{}", term.b.rows(), term.b.cols()),
                    expected: format!("{d_b}x{d_b}"),
                });
            }
            if !term.b.is_finite() {
                return Err(CoreError::ModelInvalid(format!(
                    "non-finite entry in coupling matrix B_({}, {})",
                    term.f, term.g
                )));
            }
            if !seen.insert((term.f, term.g)) {
                return Err(CoreError::ModelInvalid(format!(
                    "duplicate coupling term ({}, {})",
                    term.f, term.g
                )));
            }
        }

        // Hermiticity of V as a whole: B_fg = B_gf^dag entrywise.
        let lookup = |f: usize, g: usize| coupling_terms.iter().find(|t| t.f == f && t.g == g);
        let mut offending: Vec<(usize, usize)> = Vec::new();
        for term in &coupling_terms {
            match lookup(term.g, term.f) {
                Some(partner) => {
                    if term.b.max_abs_diff(&partner.b.adjoint()) > tol::MODEL_HERMITIAN_TOL {
                        if term.f <= term.g {
                            offending.push((term.f, term.g));
                        }
                    }
                }
                None => offending.push((term.f, term.g)),
            }
        }
        if !offending.is_empty() {
            return Err(CoreError::ModelInvalid(format!(
                "coupling is not Hermitian: pairing B_fg = B_gf^dag fails for (f, g) in {offending:?}"
            )));
        }

        Ok(Self {
            d_s,
            d_b,
            micro_energies,
            h_m,
            coupling_terms,
        })
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn micro_energies(&self) -> &[f64] {
        &self.micro_energies
    }

    pub fn h_m(&self) -> &ComplexMatrix {
        &self.h_m
    }

    pub fn coupling_terms(&self) -> &[CouplingTerm] {
        &self.coupling_terms
    }

    /// The coupling block `B_fg`, zero when no term is declared.
    pub fn coupling_block(&self, f: usize, g: usize) -> ComplexMatrix {
        self.coupling_terms
            .iter()
            .find(|t| t.f == f && t.g == g)
            .map(|t| t.b.clone())
            .unwrap_or_else(|| ComplexMatrix::zeros(self.d_b, self.d_b))
    }
}

/// Sector restrictions of the model: annihilation maps, the one-particle
/// Hamiltonian, and cached eigendecompositions of both sector Hamiltonians.
#[derive(Clone, Debug)]
pub struct SectorOperators {
    d_s: usize,
    d_b: usize,
    micro_energies: Vec<f64>,
    /// `a_f` restricted `N=1 -> N=0`: the `d_b x (d_s d_b)` matrix `<f| ⊗ I`.
    a_maps: Vec<ComplexMatrix>,
    /// One-particle Hamiltonian `h1 = diag(E) ⊗ I + I ⊗ h_m + sum B_fg`.
    h1: ComplexMatrix,
    /// Bath-only Hamiltonian (`N = 0` block), alias of `h_m`.
    h0: ComplexMatrix,
    /// Coupling restricted to `N = 1`: `v1 = sum |f><g| ⊗ B_fg`.
    v1: ComplexMatrix,
    eig_h0: HermitianEigen,
    eig_h1: HermitianEigen,
}

/// Build the sector restrictions of a validated model.
pub fn build_sectors(model: &SystemModel) -> Result<SectorOperators> {
    let d_s = model.d_s();
    let d_b = model.d_b();
    let n1 = d_s * d_b;

    let mut a_maps = Vec::with_capacity(d_s);
    for f in 0..d_s {
        let mut a = ComplexMatrix::zeros(d_b, n1);
        for beta in 0..d_b {
            a[(beta, f * d_b + beta)] = Complex64::new(1.0, 0.0);
        }
        a_maps.push(a);
    }

    let ident_b = ComplexMatrix::identity(d_b);
    let ident_s = ComplexMatrix::identity(d_s);
    let mut v1 = ComplexMatrix::zeros(n1, n1);
    for term in model.coupling_terms() {
        let mut e_fg = ComplexMatrix::zeros(d_s, d_s);
        e_fg[(term.f, term.g)] = Complex64::new(1.0, 0.0);
        v1 = &v1 + &tensor(&e_fg, &term.b)?;
    }
    let h1 = &(&tensor(&ComplexMatrix::diag_real(model.micro_energies()), &ident_b)?
        + &tensor(&ident_s, model.h_m())?)
        + &v1;
    h1.require_hermitian("one-particle Hamiltonian h1", tol::MODEL_HERMITIAN_TOL)?;

    let eig_h0 = eigh(model.h_m())?;
    let eig_h1 = eigh(&h1)?;

    Ok(SectorOperators {
        d_s,
        d_b,
        micro_energies: model.micro_energies().to_vec(),
        a_maps,
        h1,
        h0: model.h_m().clone(),
        v1,
        eig_h0,
        eig_h1,
    })
}

impl SectorOperators {
    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn micro_energies(&self) -> &[f64] {
        &self.micro_energies
    }

    /// Annihilation map for mode `f` (`N=1 -> N=0`).
    pub fn a_map(&self, f: usize) -> &ComplexMatrix {
        &self.a_maps[f]
    }

    pub fn h1(&self) -> &ComplexMatrix {
        &self.h1
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn v1(&self) -> &ComplexMatrix {
        &self.v1
    }

    /// Cached eigendecomposition of the bath Hamiltonian.
    pub fn eig_h0(&self) -> &HermitianEigen {
        &self.eig_h0
    }

    /// Cached eigendecomposition of the one-particle Hamiltonian.
    pub fn eig_h1(&self) -> &HermitianEigen {
        &self.eig_h1
    }
}

/// Bath statistical operator with its eigendecomposition, weights sorted
/// descending, and the stationarity diagnostic `||[rho_m, h_m]||`.
#[derive(Clone, Debug)]
pub struct BathState {
    rho_m: ComplexMatrix,
    /// Weights `pi_xi`, descending.
    weights: Vec<f64>,
    /// Eigenvectors as columns, ordered to match `weights`.
    vectors: ComplexMatrix,
    commutator_defect: f64,
}

impl BathState {
    /// Validate a bath statistical operator against `h_m`.
    ///
    /// Requires Hermiticity, positive semidefiniteness (eigenvalues at or
    /// above `-`[`tol::PSD_EIG_FLOOR`]), and unit trace within
    /// [`tol::STATE_TRACE_TOL`]. The commutator with `h_m` is recorded as a
    /// diagnostic, not an error.
    pub fn new(rho_m: ComplexMatrix, h_m: &ComplexMatrix) -> Result<Self> {
        rho_m.require_hermitian("bath state rho_m", tol::HERMITIAN_TOL)?;
        if rho_m.rows() != h_m.rows() {
            return Err(CoreError::Dimension {
                context: "bath state vs bath Hamiltonian".to_string(),
                got: format!("{}", rho_m.rows()),
                expected: format!("{}", h_m.rows()),
            });
        }
        let trace = rho_m.trace();
        if (trace.re - 1.0).abs() > tol::STATE_TRACE_TOL || trace.im.abs() > tol::STATE_TRACE_TOL {
            return Err(CoreError::ModelInvalid(format!(
                "bath state trace {:.12} is not 1 within {:.1e}",
                trace.re,
                tol::STATE_TRACE_TOL
            )));
        }
        let e = eigh(&rho_m)?;
        if let Some(&min) = e.values.first() {
            if min < -tol::PSD_EIG_FLOOR {
                return Err(CoreError::ModelInvalid(format!(
                    "bath state has negative eigenvalue {min:.3e}"
                )));
            }
        }
        // Reorder descending; the eigensolver returns ascending.
        let d = e.values.len();
        let mut weights = Vec::with_capacity(d);
        let mut vectors = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let src = d - 1 - k;
            weights.push(e.values[src].max(0.0));
            vectors.set_column(k, &e.vectors.column(src));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol::STATE_TRACE_TOL {
            return Err(CoreError::ModelInvalid(format!(
                "bath weights sum to {total:.12}, not 1"
            )));
        }
        let commutator_defect = (&(&rho_m * h_m) - &(h_m * &rho_m)).fro_norm();
        Ok(Self {
            rho_m,
            weights,
            vectors,
            commutator_defect,
        })
    }

    /// Gibbs state `exp(-beta h_m) / Z`, built in the bath eigenbasis so it
    /// commutes with `h_m` exactly up to the eigensolver's accuracy.
    pub fn gibbs(h_m: &ComplexMatrix, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(CoreError::Domain(format!(
                "Gibbs inverse temperature must be finite and nonnegative, got {beta}"
            )));
        }
        let e = eigh(h_m)?;
        // Shift by the minimum energy for overflow safety; Z cancels it.
        let e_min = e.values.first().copied().unwrap_or(0.0);
        let z: f64 = e.values.iter().map(|&v| (-beta * (v - e_min)).exp()).sum();
        let rho_m = e.apply_function(|v| Complex64::new((-beta * (v - e_min)).exp() / z, 0.0));
        Self::new(rho_m.hermitian_part(), h_m)
    }

    pub fn rho_m(&self) -> &ComplexMatrix {
        &self.rho_m
    }

    pub fn d_b(&self) -> usize {
        self.rho_m.rows()
    }

    /// Eigenvalues `pi_xi`, descending.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Eigenvector `|xi>` matching `weights()[xi]`.
    pub fn vector(&self, xi: usize) -> ComplexMatrix {
        self.vectors.column(xi)
    }

    /// Frobenius norm of `[rho_m, h_m]` (stationarity diagnostic).
    pub fn commutator_defect(&self) -> f64 {
        self.commutator_defect
    }
}

/// Reduced statistical operator of the particle. The trace may be below one:
/// subcollections selected by counting outcomes are subnormalized.
#[derive(Clone, Debug)]
pub struct MicroState {
    rho1: ComplexMatrix,
}

impl MicroState {
    /// Validate: Hermitian, positive semidefinite, trace in `(0, 1]` up to
    /// tolerance.
    pub fn new(rho1: ComplexMatrix) -> Result<Self> {
        rho1.require_hermitian("micro state rho1", tol::HERMITIAN_TOL)?;
        let e = eigh(&rho1.hermitian_part())?;
        if let Some(&min) = e.values.first() {
            if min < -tol::PSD_EIG_FLOOR {
                return Err(CoreError::ModelInvalid(format!(
                    "micro state has negative eigenvalue {min:.3e}"
                )));
            }
        }
        let trace = rho1.trace().re;
        if trace <= 0.0 || trace > 1.0 + tol::STATE_TRACE_TOL {
            return Err(CoreError::ModelInvalid(format!(
                "micro state trace {trace:.12} outside (0, 1]"
            )));
        }
        Ok(Self { rho1 })
    }

    /// Pure state from a ket (normalized first).
    pub fn from_ket(ket: &ComplexMatrix) -> Result<Self> {
        Self::new(ket.normalized()?.dyad())
    }

    /// Maximally mixed state `I / d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            rho1: ComplexMatrix::identity(d).scale_re(1.0 / d as f64),
        }
    }

    pub fn rho1(&self) -> &ComplexMatrix {
        &self.rho1
    }

    pub fn d_s(&self) -> usize {
        self.rho1.rows()
    }

    pub fn trace(&self) -> f64 {
        self.rho1.trace().re
    }
}

/// Embed a product state into the one-particle sector: `rho1 ⊗ rho_m` in
/// the micro-first factorization.
pub fn embed_product_state(rho1: &MicroState, bath: &BathState) -> Result<ComplexMatrix> {
    tensor(rho1.rho1(), bath.rho_m())
}

/// Reduce a one-particle statistical operator to the particle:
/// `(out)_gf = Tr(a^dag_f a_g rho)`, equal to the partial trace over the
/// bath in the micro-first factorization.
pub fn reduce(rho_full: &ComplexMatrix, sec: &SectorOperators) -> Result<ComplexMatrix> {
    partial_trace_bath(rho_full, sec.d_s(), sec.d_b())
}
