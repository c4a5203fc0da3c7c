//! Scattering superoperator resolvents and T-blocks on the bath-only sector,
//! plus the translation-invariant position-resolved kernel on a ring
//! lattice.
//!
//! A sector-crossing map `Y` sends the one-particle sector to the bath-only
//! sector (a `d_b x (d_s d_b)` matrix). On such maps the Hamiltonian
//! superoperator acts as `S Y = i (h_0 Y - Y h_1)` and the coupling as
//! `W Y = -i Y v_1` (the coupling has no bath-only block). The scattering
//! map applied to an annihilation operator,
//! `t_apply = W a_k + W (z - S)^{-1} W a_k`, is evaluated with one
//! shifted-Sylvester solve in the cached eigenbases; the dense superoperator
//! inversion is kept only as a verification oracle.

use num_complex::Complex64;

use crate::algebra::{
    lu_inverse, solve_shifted_sylvester_cached, tensor, ComplexMatrix,
};
use crate::error::CoreError;
use crate::fock::{SectorOperators, SystemModel};
use crate::tol;
use crate::Result;

/// A resolvent evaluation point `z` with its regularizer `eta`.
///
/// Physical evaluations sit just right of the imaginary axis at
/// `z = -i E_k + eta`.
#[derive(Clone, Copy, Debug)]
pub struct SpectralPoint {
    z: Complex64,
    eta: f64,
}

impl SpectralPoint {
    /// Validate a general evaluation point. `eta` must exceed the resonance
    /// guard.
    pub fn new(z: Complex64, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > tol::RESONANCE_GUARD) {
            return Err(CoreError::Domain(format!(
                "spectral regularizer eta = {eta:.3e} must exceed {:.1e}",
                tol::RESONANCE_GUARD
            )));
        }
        Ok(Self { z, eta })
    }

    /// The physical point `z = -i energy + eta`.
    pub fn at_energy(energy: f64, eta: f64) -> Result<Self> {
        Self::new(Complex64::new(eta, -energy), eta)
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The conjugate point `z*` (used by adjoint evaluations), carrying the
    /// same regularizer.
    pub fn conjugate(&self) -> Self {
        Self {
            z: self.z.conj(),
            eta: self.eta,
        }
    }
}

/// One scattering block `T^k_h(z)`: an operator on the bath-only sector.
#[derive(Clone, Debug)]
pub struct TBlock {
    pub k: usize,
    pub h: usize,
    pub z: Complex64,
    pub matrix: ComplexMatrix,
}

/// Apply the scattering map to the annihilation operator of mode `k`,
/// returning the sector-crossing map `d_b x (d_s d_b)`.
///
/// `first = W a_k = -i a_k v_1`; the resolvent correction is
/// `-i R v_1` with `R` the shifted-Sylvester solve against `first`.
pub fn t_apply(sec: &SectorOperators, p: SpectralPoint, k: usize) -> Result<ComplexMatrix> {
    assert!(k < sec.d_s(), "mode index out of range");
    let minus_i = Complex64::new(0.0, -1.0);
    let first = (&(sec.a_map(k) * sec.v1())).scale(minus_i);
    let resolvent = solve_shifted_sylvester_cached(p.z(), sec.eig_h0(), sec.eig_h1(), &first)?;
    Ok(&first + &(&(&resolvent * sec.v1())).scale(minus_i))
}

/// Apply the scattering map to the creation operator of mode `h`,
/// returning the raising sector-crossing map `(d_s d_b) x d_b`.
///
/// On raising maps the Hamiltonian superoperator acts with the factors
/// exchanged, `S Y = i (h_1 Y - Y h_0)`, and the coupling as
/// `W Y = i v_1 Y`. This is an independent code path from [`t_apply`]
/// (different solve orientation), used for adjoint-consistency checks.
pub fn t_apply_raising(sec: &SectorOperators, p: SpectralPoint, h: usize) -> Result<ComplexMatrix> {
    assert!(h < sec.d_s(), "mode index out of range");
    let plus_i = Complex64::new(0.0, 1.0);
    let first = (&(sec.v1() * &sec.a_map(h).adjoint())).scale(plus_i);
    let resolvent = solve_shifted_sylvester_cached(p.z(), sec.eig_h1(), sec.eig_h0(), &first)?;
    Ok(&first + &(&(sec.v1() * &resolvent)).scale(plus_i))
}

/// The scattering block `T^k_h(z) = (t_apply at k) a^dag_h`, an operator on
/// the bath-only sector.
pub fn t_block(sec: &SectorOperators, p: SpectralPoint, k: usize, h: usize) -> Result<TBlock> {
    let applied = t_apply(sec, p, k)?;
    Ok(TBlock {
        k,
        h,
        z: p.z(),
        matrix: &applied * &sec.a_map(h).adjoint(),
    })
}

/// All blocks `T^k_h(z)` for fixed `k`, sharing one solve.
pub fn t_block_row(sec: &SectorOperators, p: SpectralPoint, k: usize) -> Result<Vec<TBlock>> {
    let applied = t_apply(sec, p, k)?;
    Ok((0..sec.d_s())
        .map(|h| TBlock {
            k,
            h,
            z: p.z(),
            matrix: &applied * &sec.a_map(h).adjoint(),
        })
        .collect())
}

/// Max-norm defect of the adjoint relation
/// `T^k_h(z)^dag = a_h (scattering at z*) a^dag_k`, evaluated through the
/// independent raising-map path.
pub fn adjoint_relation_defect(
    sec: &SectorOperators,
    p: SpectralPoint,
    k: usize,
    h: usize,
) -> Result<f64> {
    let direct = t_block(sec, p, k, h)?.matrix.adjoint();
    let raised = t_apply_raising(sec, p.conjugate(), k)?;
    let mirrored = sec.a_map(h) * &raised;
    Ok(direct.max_abs_diff(&mirrored))
}

/// Dense superoperator matrix of the Hamiltonian action on lowering
/// sector-crossing maps: `vec(i (h_0 Y - Y h_1))` with column stacking.
///
/// `free` selects the uncoupled Hamiltonian (`h_1` without `v_1`). This is
/// the verification oracle; production code uses the Sylvester solve.
pub fn dense_lowering_superop(sec: &SectorOperators, free: bool) -> Result<ComplexMatrix> {
    let n1 = sec.d_s() * sec.d_b();
    let dim = sec.d_b() * n1;
    if dim > tol::MAX_TENSOR_DIM {
        return Err(CoreError::Size {
            context: "dense lowering superoperator".to_string(),
            dim,
            cap: tol::MAX_TENSOR_DIM,
        });
    }
    let h_right = if free {
        sec.h1() - sec.v1()
    } else {
        sec.h1().clone()
    };
    let left = tensor(&ComplexMatrix::identity(n1), sec.h0())?;
    let right = tensor(&h_right.transpose(), &ComplexMatrix::identity(sec.d_b()))?;
    Ok((&left - &right).scale(Complex64::new(0.0, 1.0)))
}

/// Dense superoperator matrix of the coupling action on lowering maps:
/// `vec(-i Y v_1)`.
pub fn dense_coupling_superop(sec: &SectorOperators) -> Result<ComplexMatrix> {
    let right = tensor(&sec.v1().transpose(), &ComplexMatrix::identity(sec.d_b()))?;
    Ok(right.scale(Complex64::new(0.0, -1.0)))
}

/// Verification oracle for [`t_apply`]: build the dense superoperator,
/// invert `(z - S)` by LU, and apply the coupling twice.
pub fn t_apply_dense_oracle(
    sec: &SectorOperators,
    p: SpectralPoint,
    k: usize,
) -> Result<ComplexMatrix> {
    let n1 = sec.d_s() * sec.d_b();
    let s_h = dense_lowering_superop(sec, false)?;
    let s_v = dense_coupling_superop(sec)?;
    let dim = s_h.rows();
    let shifted = &ComplexMatrix::identity(dim).scale(p.z()) - &s_h;
    let resolvent = lu_inverse(&shifted)?;
    let a_vec = sec.a_map(k).to_stacked();
    let first = &s_v * &a_vec;
    let out = &first + &(&(&s_v * &resolvent) * &first);
    Ok(ComplexMatrix::from_stacked(&out, sec.d_b(), n1))
}

/// Residuals of the two resolvent factorization identities on the
/// sector-crossing operator space, computed with dense inverses.
#[derive(Clone, Copy, Debug)]
pub struct ResolventCheck {
    /// `(z - S)^{-1} = (z - S_0)^{-1} [1 + W (z - S)^{-1}]` residual.
    pub first_form: f64,
    /// `(z - S)^{-1} = (z - S_0)^{-1} + (z - S)^{-1} W (z - S_0)^{-1}` residual.
    pub second_form: f64,
}

impl ResolventCheck {
    pub fn residual(&self) -> f64 {
        self.first_form.max(self.second_form)
    }
}

/// Verify both factorization identities of the full resolvent through the
/// free one; max-norm residuals must stay below
/// [`tol::RESOLVENT_IDENTITY_TOL`] for a healthy evaluation point.
pub fn verify_resolvent_identity(sec: &SectorOperators, p: SpectralPoint) -> Result<ResolventCheck> {
    let s_h = dense_lowering_superop(sec, false)?;
    let s_h0 = dense_lowering_superop(sec, true)?;
    let s_v = dense_coupling_superop(sec)?;
    let dim = s_h.rows();
    let ident = ComplexMatrix::identity(dim);
    let r_full = lu_inverse(&(&ident.scale(p.z()) - &s_h))?;
    let r_free = lu_inverse(&(&ident.scale(p.z()) - &s_h0))?;
    let first = &r_free * &(&ident + &(&s_v * &r_full));
    let second = &r_free + &(&(&r_full * &s_v) * &r_free);
    Ok(ResolventCheck {
        first_form: r_full.max_abs_diff(&first),
        second_form: r_full.max_abs_diff(&second),
    })
}

// ---------------------------------------------------------------------------
// Ring lattice
// ---------------------------------------------------------------------------

/// Translation-invariant model on a ring of `nx` sites.
///
/// Micro modes are the plane waves `u_f(x) = e^{i 2 pi f x / nx} / sqrt(nx)`;
/// a coupling built from real-space terms `C_r` (site-distance `r`, with
/// `C_0` Hermitian) is automatically mode-diagonal:
/// `B_f = C_0 + sum_{r >= 1} (e^{-i 2 pi f r / nx} C_r + h.c.)`.
#[derive(Clone, Debug)]
pub struct RingModel {
    model: SystemModel,
    nx: usize,
    spacing: f64,
}

impl RingModel {
    /// Build from mode energies and real-space coupling terms
    /// `couplings[r] = C_r` for `r = 0 ..= r_max` with `r_max < nx / 2`
    /// (longer ranges wrap ambiguously on the ring).
    pub fn new(
        mode_energies: Vec<f64>,
        h_m: ComplexMatrix,
        couplings: Vec<ComplexMatrix>,
        spacing: f64,
    ) -> Result<Self> {
        let nx = mode_energies.len();
        if nx < 2 {
            return Err(CoreError::ModelInvalid(
                "a ring needs at least two sites".to_string(),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(CoreError::Domain(format!(
                "lattice spacing must be positive, got {spacing}"
            )));
        }
        if couplings.is_empty() {
            return Err(CoreError::ModelInvalid(
                "at least the on-site coupling C_0 is required (possibly zero)".to_string(),
            ));
        }
        if couplings.len() - 1 >= nx.div_ceil(2) {
            return Err(CoreError::ModelInvalid(format!(
                "coupling range {} does not fit a ring of {} sites without wrapping",
                couplings.len() - 1,
                nx
            )));
        }
        couplings[0].require_hermitian("on-site coupling C_0", tol::MODEL_HERMITIAN_TOL)?;

        let d_b = h_m.rows();
        let mut terms = Vec::with_capacity(nx);
        for f in 0..nx {
            let mut b = couplings[0].clone();
            for (r, c_r) in couplings.iter().enumerate().skip(1) {
                let phase = Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (f * r) as f64 / nx as f64,
                );
                b = &b + &(&c_r.scale(phase) + &c_r.adjoint().scale(phase.conj()));
            }
            if b.rows() != d_b {
                return Err(CoreError::Dimension {
                    context: format!("ring coupling C_{{{}}}", f),
                    got: format!("{}", b.rows()),
                    expected: format!("{d_b}"),
                });
            }
            terms.push(crate::fock::CouplingTerm { f, g: f, b });
        }
        let model = SystemModel::new(mode_energies, h_m, terms)?;
        Ok(Self { model, nx, spacing })
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Plane-wave amplitude `u_f(x)`.
    pub fn mode_amplitude(&self, f: usize, x: usize) -> Complex64 {
        Complex64::from_polar(
            1.0 / (self.nx as f64).sqrt(),
            2.0 * std::f64::consts::PI * (f * x) as f64 / self.nx as f64,
        )
    }

    /// The cyclic-shift phase of mode `f`: shifting by one site multiplies
    /// mode `f` by `e^{-i 2 pi f / nx}`.
    pub fn shift_phase(&self, f: usize) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f as f64 / self.nx as f64)
    }
}

/// Measure how far a model on `nx` ring modes is from commuting with the
/// cyclic shift: max-norm of `[v_1, S ⊗ I]` with
/// `S = diag(e^{-i 2 pi f / nx})` the mode-space shift phases.
pub fn shift_commutator_defect(model: &SystemModel, nx: usize) -> Result<f64> {
    if model.d_s() != nx {
        return Err(CoreError::Dimension {
            context: "ring mode count".to_string(),
            got: format!("{}", model.d_s()),
            expected: format!("{nx}"),
        });
    }
    let sec = crate::fock::build_sectors(model)?;
    let shift = ComplexMatrix::diag(
        &(0..nx)
            .map(|f| {
                Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f as f64 / nx as f64)
            })
            .collect::<Vec<_>>(),
    );
    let s_full = tensor(&shift, &ComplexMatrix::identity(model.d_b()))?;
    Ok((&(sec.v1() * &s_full) - &(&s_full * sec.v1())).max_norm())
}

/// Position-resolved decomposition of one scattering block on the ring.
///
/// `x_blocks[X]` attributes the scattering event to lattice site `X` through
/// the outgoing coordinate: `T^k_l(X) = (1/nx) sum_f e^{i 2 pi (f - k) X / nx}
/// T^f_l`. The site sum reproduces the mode block exactly, and shifting the
/// site index multiplies the block by the mode phase difference.
#[derive(Clone, Debug)]
pub struct TranslationKernel {
    pub nx: usize,
    pub spacing: f64,
    pub k: usize,
    pub l: usize,
    pub z: Complex64,
    /// Per-site blocks, indexed by site.
    pub x_blocks: Vec<ComplexMatrix>,
    /// The mode-basis block `T^k_l(z)` the site sum must reproduce.
    pub total: ComplexMatrix,
    /// Real-space kernel values `T(r)` for separations `r = 0 .. nx`,
    /// reconstructed from the mode-diagonal blocks.
    pub kernel: Vec<ComplexMatrix>,
}

impl TranslationKernel {
    /// Max-norm defect of the site resummation `sum_X T(X) = T`.
    pub fn resummation_defect(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.total.rows(), self.total.cols());
        for b in &self.x_blocks {
            sum = &sum + b;
        }
        sum.max_abs_diff(&self.total)
    }

    /// Max-norm defect of the shift covariance
    /// `T(X + 1) = e^{-i 2 pi (k - l) / nx} T(X)` over all sites.
    pub fn shift_covariance_defect(&self) -> f64 {
        let phase = Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * (self.k as f64 - self.l as f64) / self.nx as f64,
        );
        (0..self.nx)
            .map(|x| {
                self.x_blocks[(x + 1) % self.nx].max_abs_diff(&self.x_blocks[x].scale(phase))
            })
            .fold(0.0, f64::max)
    }
}

/// Build the position-resolved blocks `T^k_l(X, z)` for a model on `nx`
/// ring modes with the given lattice spacing.
///
/// Errors with a symmetry failure (carrying the measured defect) when the
/// model does not commute with the cyclic shift within
/// [`tol::SHIFT_SYMMETRY_TOL`]; the site attribution is only meaningful for
/// translation-invariant models.
pub fn position_resolved_blocks(
    model: &SystemModel,
    nx: usize,
    spacing: f64,
    p: SpectralPoint,
    k: usize,
    l: usize,
) -> Result<TranslationKernel> {
    assert!(k < nx && l < nx, "mode indices out of range");
    let defect = shift_commutator_defect(model, nx)?;
    if defect > tol::SHIFT_SYMMETRY_TOL {
        return Err(CoreError::Symmetry {
            context: "ring model vs cyclic shift".to_string(),
            defect,
            tol: tol::SHIFT_SYMMETRY_TOL,
        });
    }
    let sec = crate::fock::build_sectors(model)?;
    let sec = &sec;

    // One solve per mode: column l of the block matrix plus the diagonal.
    let mut col_blocks = Vec::with_capacity(nx);
    let mut diag_blocks = Vec::with_capacity(nx);
    for f in 0..nx {
        let applied = t_apply(sec, p, f)?;
        col_blocks.push(&applied * &sec.a_map(l).adjoint());
        diag_blocks.push(&applied * &sec.a_map(f).adjoint());
    }
    let total = col_blocks[k].clone();

    let d_b = sec.d_b();
    let mut x_blocks = Vec::with_capacity(nx);
    for x in 0..nx {
        let mut acc = ComplexMatrix::zeros(d_b, d_b);
        for (f, block) in col_blocks.iter().enumerate() {
            let phase = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * ((f as f64 - k as f64) * x as f64) / nx as f64,
            );
            acc = &acc + &block.scale(phase / nx as f64);
        }
        x_blocks.push(acc);
    }

    // Real-space kernel from the mode-diagonal blocks.
    let mut kernel = Vec::with_capacity(nx);
    for r in 0..nx {
        let mut acc = ComplexMatrix::zeros(d_b, d_b);
        for (f, block) in diag_blocks.iter().enumerate() {
            let phase = Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * (f * r) as f64 / nx as f64,
            );
            acc = &acc + &block.scale(phase / nx as f64);
        }
        kernel.push(acc);
    }

    let out = TranslationKernel {
        nx,
        spacing,
        k,
        l,
        z: p.z(),
        x_blocks,
        total,
        kernel,
    };
    debug_assert!(out.resummation_defect() <= tol::RESUMMATION_TOL);
    Ok(out)
}
