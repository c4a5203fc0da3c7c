//! Built-in demonstration models with closed-form entries.
//!
//! Every matrix element is a fixed trigonometric expression of its indices,
//! so the same model can be regenerated exactly anywhere (tests, the
//! command-line demo, external checks) without shipping data files.

use num_complex::Complex64;

use crate::algebra::ComplexMatrix;
use crate::fock::{BathState, CouplingTerm, SystemModel};
use crate::Result;

/// Deterministic dense matrix with entries
/// `scale * (sin(p (a+1)(b+2)) + i cos(q (a+2)(b+1))) / sqrt(2 d)`.
///
/// Entry magnitudes are O(`scale` / sqrt(d)), so Frobenius norms stay O(
/// `scale`) at every size.
pub fn frozen_matrix(d: usize, p: f64, q: f64, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |a, b| {
        let s = (p * ((a + 1) * (b + 2)) as f64).sin();
        let t = (q * ((a + 2) * (b + 1)) as f64).cos();
        Complex64::new(s, t) * (scale / (2.0 * d as f64).sqrt())
    })
}

fn hermitian_half(m: &ComplexMatrix) -> ComplexMatrix {
    m.hermitian_part()
}

/// Evenly spaced micro levels spanning `[-2, 2]`.
pub fn demo_levels(d_b: usize) -> Vec<f64> {
    let step = 4.0 / (d_b as f64 - 1.0);
    (0..d_b).map(|k| -2.0 + step * k as f64).collect()
}

/// The two-mode demonstration model: mode energies `(0, split)`, a `d_b`
/// level bath spanning `[-2, 2]`, and closed-form coupling blocks of
/// overall strength `g` (dephasing-dominant: the mode-off-diagonal block is
/// five times weaker than the diagonal ones).
pub fn demo_model(d_b: usize, g: f64, split: f64) -> SystemModel {
    assert!(d_b >= 2, "the demo bath needs at least two levels");
    let levels = demo_levels(d_b);
    let h_m = ComplexMatrix::diag_real(&levels);
    let b00 = hermitian_half(&frozen_matrix(d_b, 1.3, 2.1, 0.5)).scale_re(g);
    let b11 = hermitian_half(&frozen_matrix(d_b, 0.7, 1.7, 0.5)).scale_re(g);
    let b01 = frozen_matrix(d_b, 2.3, 0.9, 0.1).scale_re(g);
    let b10 = b01.adjoint();
    SystemModel::new(
        vec![0.0, split],
        h_m,
        vec![
            CouplingTerm { f: 0, g: 0, b: b00 },
            CouplingTerm { f: 1, g: 1, b: b11 },
            CouplingTerm { f: 0, g: 1, b: b01 },
            CouplingTerm { f: 1, g: 0, b: b10 },
        ],
    )
    .expect("the demo model is valid by construction")
}

/// Standard demo: six bath levels, coupling `g = 0.1`, mode splitting
/// `0.02`.
pub fn demo_standard() -> SystemModel {
    demo_model(6, 0.1, 0.02)
}

/// Degenerate demo: as [`demo_standard`] but with both mode energies at
/// zero.
pub fn demo_degenerate(g: f64) -> SystemModel {
    demo_model(6, g, 0.0)
}

/// Thermal bath state for a demo model at inverse temperature `beta`.
pub fn demo_bath(model: &SystemModel, beta: f64) -> Result<BathState> {
    BathState::gibbs(model.h_m(), beta)
}

/// The tiny two-mode, two-level model with literal entries, small enough
/// for dense-oracle cross-checks.
pub fn demo_small() -> SystemModel {
    let c = Complex64::new;
    let b00 = ComplexMatrix::from_rows(&[
        vec![c(0.2, 0.0), c(0.1, -0.05)],
        vec![c(0.1, 0.05), c(-0.1, 0.0)],
    ]);
    let b11 = ComplexMatrix::from_rows(&[
        vec![c(-0.1, 0.0), c(0.0, 0.2)],
        vec![c(0.0, -0.2), c(0.3, 0.0)],
    ]);
    let b01 = ComplexMatrix::from_rows(&[
        vec![c(0.1, 0.0), c(0.05, 0.0)],
        vec![c(0.0, 0.02), c(0.1, 0.0)],
    ]);
    let b10 = b01.adjoint();
    SystemModel::new(
        vec![0.0, 0.3],
        ComplexMatrix::diag_real(&[-0.5, 0.5]),
        vec![
            CouplingTerm { f: 0, g: 0, b: b00 },
            CouplingTerm { f: 1, g: 1, b: b11 },
            CouplingTerm { f: 0, g: 1, b: b01 },
            CouplingTerm { f: 1, g: 0, b: b10 },
        ],
    )
    .expect("the small demo model is valid by construction")
}

/// A translation-invariant ring demo: `nx` sites, a two-level bath, an
/// on-site and a nearest-neighbor coupling term with closed-form entries.
pub fn demo_ring(nx: usize, g: f64) -> crate::tmatrix::RingModel {
    assert!(nx >= 4, "the ring demo needs at least four sites");
    // Mode energies of a tight-binding band, 2 (1 - cos k).
    let energies: Vec<f64> = (0..nx)
        .map(|f| 2.0 * (1.0 - (2.0 * std::f64::consts::PI * f as f64 / nx as f64).cos()))
        .collect();
    let h_m = ComplexMatrix::diag_real(&[-0.4, 0.4]);
    let c0 = hermitian_half(&frozen_matrix(2, 1.1, 1.9, 1.0)).scale_re(g);
    let c1 = frozen_matrix(2, 0.9, 1.3, 0.4).scale_re(g);
    crate::tmatrix::RingModel::new(energies, h_m, vec![c0, c1], 1.0)
        .expect("the ring demo is valid by construction")
}

/// Deterministic pseudo-random Hermitian matrix for stress sweeps:
/// distinct indices give visibly different matrices, identical indices
/// regenerate identical ones.
pub fn fixture_hermitian(d: usize, index: usize) -> ComplexMatrix {
    let k = index as f64;
    hermitian_half(&frozen_matrix(d, 1.1 + 0.37 * k, 1.9 + 0.29 * k, 1.0))
}

/// Deterministic pseudo-random density matrix (Hermitian, positive
/// semidefinite, unit trace) for stress sweeps.
pub fn fixture_state(d: usize, index: usize) -> ComplexMatrix {
    let k = index as f64;
    let m = frozen_matrix(d, 0.7 + 0.31 * k, 1.3 + 0.41 * k, 1.0);
    // Shift by the identity so the Gram matrix is never near-singular.
    let shifted = &m + &ComplexMatrix::identity(d).scale_re(0.4);
    let psd = &shifted.adjoint() * &shifted;
    let trace = psd.trace().re;
    psd.scale_re(1.0 / trace)
}

/// Deterministic pseudo-random normalized ket for stress sweeps.
pub fn fixture_ket(d: usize, index: usize) -> ComplexMatrix {
    let k = index as f64;
    let amplitudes: Vec<Complex64> = (0..d)
        .map(|i| {
            let a = (0.9 + 0.27 * k) * (i as f64 + 1.0);
            Complex64::new(a.sin() + 0.3, a.cos())
        })
        .collect();
    ComplexMatrix::ket(&amplitudes)
        .normalized()
        .expect("fixture amplitudes are never all zero")
}

/// Deterministic pseudo-random generator bundle for stress sweeps:
/// `n_channels` dense jump channels with positive weights, the loss
/// operator `(1/2) sum pi L^dag L + margin I`. With `margin = 0` the raw
/// and enforced operators coincide (trace preserving); `margin > 0` makes
/// the raw-mode bundle uniformly absorptive.
pub fn fixture_bundle(
    d: usize,
    n_channels: usize,
    index: usize,
    margin: f64,
    mode: crate::generator::GeneratorMode,
) -> crate::generator::GeneratorBundle {
    use crate::generator::{Channel, GeneratorBundle};
    let k = index as f64;
    let h = fixture_hermitian(d, index);
    let channels: Vec<Channel> = (0..n_channels)
        .map(|j| {
            let jj = j as f64;
            let weight = 0.3 + 0.5 * (1.7 * (k + jj + 1.0)).sin().abs();
            let matrix = frozen_matrix(d, 0.9 + 0.23 * k + 0.61 * jj, 1.5 + 0.19 * k + 0.43 * jj, 0.6);
            Channel {
                weight,
                matrix,
                bath_level: j,
                bath_state: 0,
            }
        })
        .collect();
    let mut dissipator = ComplexMatrix::zeros(d, d);
    for ch in &channels {
        dissipator = &dissipator + &(&ch.matrix.adjoint() * &ch.matrix).scale_re(ch.weight);
    }
    let a = &dissipator.scale_re(0.5) + &ComplexMatrix::identity(d).scale_re(margin);
    GeneratorBundle::from_parts(&h, &a, channels, mode)
        .expect("fixture bundles are valid by construction")
}
