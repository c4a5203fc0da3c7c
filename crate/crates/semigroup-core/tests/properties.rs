//! Cross-module batch properties of the linear-algebra substrate: tensor
//! associativity, embed/partial-trace round trips, matrix-exponential
//! inverse pairing, and the shifted-Sylvester residual bound on a large
//! random family.

use num_complex::Complex64;
use proptest::prelude::*;

use semigroup_core::algebra::{
    expm, partial_trace_bath, solve_shifted_sylvester, sylvester_residual, tensor, ComplexMatrix,
};
use semigroup_core::demo::{fixture_hermitian, fixture_state, frozen_matrix};
use semigroup_core::fock::{embed_product_state, BathState, MicroState};
use semigroup_core::tol;

#[test]
fn tensor_is_associative_on_a_fixed_sweep() {
    for k in 0..24 {
        let a = frozen_matrix(2 + k % 2, 0.3 + 0.11 * k as f64, 0.9, 1.0);
        let b = frozen_matrix(2 + (k / 2) % 3, 1.1, 0.5 + 0.07 * k as f64, 1.0);
        let c = frozen_matrix(3, 0.8, 1.7 + 0.05 * k as f64, 1.0);
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        assert!(
            left.max_abs_diff(&right) < 1e-12,
            "associativity defect {:.3e} at sweep index {k}",
            left.max_abs_diff(&right)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_is_associative_on_random_triples(
        da in 1usize..4,
        db in 1usize..4,
        dc in 1usize..4,
        p in 0.1f64..3.0,
        q in 0.1f64..3.0,
    ) {
        let a = frozen_matrix(da, p, q, 1.0);
        let b = frozen_matrix(db, q + 0.4, p + 0.2, 1.0);
        let c = frozen_matrix(dc, p + q, 0.7, 1.0);
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn expm_pairs_with_its_inverse_below_norm_ten(
        d in 2usize..5,
        p in 0.1f64..3.0,
        q in 0.1f64..3.0,
        target_norm in 0.1f64..10.0,
    ) {
        // The Frobenius norm dominates the spectral norm, so rescaling the
        // Frobenius norm to the target keeps the operator norm at or below it.
        let raw = frozen_matrix(d, p, q, 1.0);
        let a = raw.scale_re(target_norm / raw.fro_norm());
        let forward = expm(&a).unwrap();
        let backward = expm(&a.scale_re(-1.0)).unwrap();
        let product = &forward * &backward;
        prop_assert!(
            product.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-8,
            "inverse pairing defect {:.3e} at norm {target_norm:.3}",
            product.max_abs_diff(&ComplexMatrix::identity(d))
        );
    }
}

#[test]
fn partial_trace_inverts_embedding_on_micro_states() {
    for k in 0..12 {
        let d_s = 2 + k % 3;
        let d_b = 2 + (k / 3) % 4;
        let rho1 = MicroState::new(fixture_state(d_s, k)).unwrap();
        let bath = BathState::gibbs(&fixture_hermitian(d_b, k + 5), 0.5 + 0.2 * k as f64).unwrap();
        let full = embed_product_state(&rho1, &bath).unwrap();
        let back = partial_trace_bath(&full, d_s, d_b).unwrap();
        assert!(
            back.max_abs_diff(rho1.rho1()) < 1e-12,
            "round-trip defect {:.3e} at sweep index {k}",
            back.max_abs_diff(rho1.rho1())
        );
    }
}

#[test]
fn sylvester_residual_bound_holds_on_two_hundred_instances() {
    for k in 0..200 {
        let dl = 2 + k % 4;
        let dr = 2 + (k / 4) % 5;
        let h_left = fixture_hermitian(dl, k);
        let h_right = fixture_hermitian(dr, k + 211);
        let x = frozen_matrix_rect(dl, dr, 0.6 + 0.013 * k as f64, 1.4 + 0.009 * k as f64);
        // The shifted spectrum is purely imaginary, so any shift with real
        // part bounded away from zero is uniformly non-resonant.
        let z = Complex64::new(
            0.25 + 0.01 * k as f64,
            -1.0 + 0.011 * k as f64,
        );
        let y = solve_shifted_sylvester(z, &h_left, &h_right, &x).unwrap();
        let residual = sylvester_residual(z, &h_left, &h_right, &x, &y);
        let bound = tol::SYLVESTER_RESIDUAL_RTOL * x.fro_norm();
        assert!(
            residual <= bound,
            "residual {residual:.3e} above bound {bound:.3e} at instance {k}"
        );
    }
}

/// Rectangular deterministic fill with the same flavor as the square fixture.
fn frozen_matrix_rect(rows: usize, cols: usize, p: f64, q: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(
            (p * (i as f64 + 1.3) + q * j as f64).sin(),
            (q * (i as f64 - 0.7) - p * (j as f64 + 2.1)).cos(),
        )
    })
}
