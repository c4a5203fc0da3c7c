//! The validate subcommand's check battery: one fast, deterministic
//! measurement per named invariant, each phrased as "measured defect must
//! stay at or below a bound" so a tolerance rescale has uniform meaning.

use num_complex::Complex64;

use semigroup_core::algebra::{
    expm, partial_trace_bath, solve_shifted_sylvester, sylvester_residual, tensor, ComplexMatrix,
};
use semigroup_core::demo::{
    demo_bath, demo_degenerate, demo_small, demo_standard, fixture_hermitian, fixture_state,
    frozen_matrix,
};
use semigroup_core::fock::{build_sectors, embed_product_state, BathState, MicroState};
use semigroup_core::generator::{Channel, GeneratorBundle, GeneratorMode};
use semigroup_core::lindblad::{apply_generator, propagate, verify_cp_tp};
use semigroup_core::optics::{
    interference_pattern, refractive_index, beam_splitter_input, InterferometerScenario,
    OpticsModel,
};
use semigroup_core::tmatrix::{verify_resolvent_identity, SpectralPoint};
use semigroup_core::unravel::{counting_distribution, dyson_terms};
use semigroup_core::{tol, Result};

/// One executed check.
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub measured: f64,
    /// Unscaled bound; the caller applies any tolerance rescale.
    pub bound: f64,
}

type CheckFn = fn() -> Result<f64>;

/// The battery: (module, check name, bound, measurement).
const CHECKS: &[(&str, &str, f64, CheckFn)] = &[
    ("algebra", "expm_inverse_pairing", 1e-8, check_expm_pairing),
    ("algebra", "tensor_associativity", 1e-12, check_tensor_assoc),
    (
        "algebra",
        "sylvester_relative_residual",
        tol::SYLVESTER_RESIDUAL_RTOL,
        check_sylvester,
    ),
    ("fock", "embed_partial_trace_round_trip", 1e-12, check_embed_round_trip),
    ("fock", "gibbs_stationarity", 1e-10, check_gibbs_stationarity),
    (
        "tmatrix",
        "resolvent_identity",
        tol::RESOLVENT_IDENTITY_TOL,
        check_resolvent_identity,
    ),
    ("generator", "adjoint_relation_residual", 1e-12, check_adjoint_residual),
    (
        "generator",
        "trace_enforced_conservation",
        tol::TRACE_ENFORCED_TOL,
        check_trace_enforced,
    ),
    ("generator", "raw_trace_defect_ratio", 1e-3, check_raw_defect_ratio),
    ("lindblad", "choi_floor", 1e-8, check_choi_floor),
    ("lindblad", "trace_drift", tol::TRACE_DRIFT_TOL, check_trace_drift),
    ("lindblad", "semigroup_property", 1e-9, check_semigroup_property),
    ("unravel", "dyson_resummation", tol::RESUMMATION_TOL, check_resummation),
    ("unravel", "poisson_exact", 1e-10, check_poisson_exact),
    ("unravel", "counting_completeness", 1e-9, check_completeness),
    ("optics", "zero_event_visibility", 1e-9, check_zero_event_visibility),
    ("optics", "background_phase_independence", 1e-10, check_background_flat),
    ("optics", "refractive_trivial_cases", 1e-15, check_refractive),
];

/// Run every check whose module contains `filter` (all when `None`).
pub fn run_checks(filter: Option<&str>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &(module, name, bound, f) in CHECKS {
        if let Some(pat) = filter {
            if !module.contains(pat) {
                continue;
            }
        }
        out.push(Check {
            module,
            name,
            measured: f()?,
            bound,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

fn demo_bundle(mode: GeneratorMode) -> Result<GeneratorBundle> {
    let model = demo_standard();
    let sec = build_sectors(&model)?;
    let bath = demo_bath(&model, 1.0)?;
    GeneratorBundle::build(&sec, &bath, 0.75, mode)
}

fn plus_state() -> ComplexMatrix {
    let half = Complex64::new(0.5, 0.0);
    ComplexMatrix::from_fn(2, 2, |_, _| half)
}

/// Single channel with `L^dag L = gamma I`: exactly Poisson counting.
fn flip_bundle(gamma: f64) -> Result<GeneratorBundle> {
    let d = 2;
    let root = gamma.sqrt();
    let l = ComplexMatrix::from_fn(d, d, |i, j| {
        if i + j == d - 1 {
            Complex64::new(root, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let a = ComplexMatrix::identity(d).scale_re(gamma / 2.0);
    GeneratorBundle::from_parts(
        &ComplexMatrix::zeros(d, d),
        &a,
        vec![Channel {
            weight: 1.0,
            matrix: l,
            bath_level: 0,
            bath_state: 0,
        }],
        GeneratorMode::TraceEnforced,
    )
}

fn poisson_pmf(mean: f64, n: usize) -> f64 {
    let mut p = (-mean).exp();
    for k in 1..=n {
        p *= mean / k as f64;
    }
    p
}

fn which_way_scenario() -> InterferometerScenario {
    InterferometerScenario {
        phase: 0.0,
        v2: Complex64::new(0.8, 0.0),
        gamma_w: 0.6,
        transit_time: 1.3,
    }
}

/// Extremes-aligned phase grid for a fringe shifted by `theta`.
fn aligned_grid(n: usize, theta: f64) -> Vec<f64> {
    (0..n)
        .map(|k| -theta + 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

fn check_expm_pairing() -> Result<f64> {
    let raw = frozen_matrix(4, 0.8, 1.7, 1.0);
    let a = raw.scale_re(6.0 / raw.fro_norm());
    let product = &expm(&a)? * &expm(&a.scale_re(-1.0))?;
    Ok(product.max_abs_diff(&ComplexMatrix::identity(4)))
}

fn check_tensor_assoc() -> Result<f64> {
    let a = frozen_matrix(2, 0.4, 1.1, 1.0);
    let b = frozen_matrix(3, 1.3, 0.6, 1.0);
    let c = frozen_matrix(2, 2.1, 0.9, 1.0);
    let left = tensor(&tensor(&a, &b)?, &c)?;
    let right = tensor(&a, &tensor(&b, &c)?)?;
    Ok(left.max_abs_diff(&right))
}

fn check_sylvester() -> Result<f64> {
    let h_left = fixture_hermitian(4, 1);
    let h_right = fixture_hermitian(5, 2);
    let x = ComplexMatrix::from_fn(4, 5, |i, j| {
        Complex64::new((0.7 * (i as f64 + 1.0)).sin(), (1.3 * (j as f64 - 2.0)).cos())
    });
    let z = Complex64::new(0.35, -0.6);
    let y = solve_shifted_sylvester(z, &h_left, &h_right, &x)?;
    Ok(sylvester_residual(z, &h_left, &h_right, &x, &y) / x.fro_norm())
}

fn check_embed_round_trip() -> Result<f64> {
    let rho1 = MicroState::new(fixture_state(3, 0))?;
    let bath = BathState::gibbs(&fixture_hermitian(4, 3), 0.7)?;
    let full = embed_product_state(&rho1, &bath)?;
    let back = partial_trace_bath(&full, 3, 4)?;
    Ok(back.max_abs_diff(rho1.rho1()))
}

fn check_gibbs_stationarity() -> Result<f64> {
    let model = demo_standard();
    let bath = demo_bath(&model, 1.0)?;
    Ok(bath.commutator_defect())
}

fn check_resolvent_identity() -> Result<f64> {
    let sec = build_sectors(&demo_small())?;
    let p = SpectralPoint::at_energy(0.0, 0.75)?;
    Ok(verify_resolvent_identity(&sec, p)?.residual())
}

fn check_adjoint_residual() -> Result<f64> {
    Ok(demo_bundle(GeneratorMode::TraceEnforced)?.adjoint_residual())
}

fn check_trace_enforced() -> Result<f64> {
    let bundle = demo_bundle(GeneratorMode::TraceEnforced)?;
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let rho = fixture_state(2, k);
        worst = worst.max(apply_generator(&bundle, &rho).trace().norm());
    }
    Ok(worst)
}

fn check_raw_defect_ratio() -> Result<f64> {
    let model = demo_degenerate(0.1);
    let sec = build_sectors(&model)?;
    let bath = demo_bath(&model, 1.0)?;
    let bundle = GeneratorBundle::build(&sec, &bath, 0.75, GeneratorMode::Raw)?;
    Ok(bundle.trace_defect(&plus_state()) / bundle.q().fro_norm())
}

fn check_choi_floor() -> Result<f64> {
    let bundle = demo_bundle(GeneratorMode::TraceEnforced)?;
    let reports = verify_cp_tp(&bundle, &[0.1, 1.0, 5.0])?;
    Ok(reports
        .iter()
        .map(|r| (-r.choi_min_eig).max(0.0))
        .fold(0.0, f64::max))
}

fn check_trace_drift() -> Result<f64> {
    let bundle = demo_bundle(GeneratorMode::TraceEnforced)?;
    let reports = verify_cp_tp(&bundle, &[0.1, 1.0, 5.0])?;
    Ok(reports.iter().map(|r| r.trace_drift).fold(0.0, f64::max))
}

fn check_semigroup_property() -> Result<f64> {
    let bundle = demo_bundle(GeneratorMode::TraceEnforced)?;
    let rho = fixture_state(2, 3);
    let joint = propagate(&bundle, &rho, 2.2)?;
    let split = propagate(&bundle, &propagate(&bundle, &rho, 1.3)?, 0.9)?;
    Ok(joint.max_abs_diff(&split))
}

fn check_resummation() -> Result<f64> {
    let bundle = demo_bundle(GeneratorMode::TraceEnforced)?;
    let rho0 = plus_state();
    let terms = dyson_terms(&bundle, &rho0, 2.0, 12)?;
    let mut sum = ComplexMatrix::zeros(2, 2);
    for term in &terms {
        sum = &sum + term;
    }
    Ok(sum.max_abs_diff(&propagate(&bundle, &rho0, 2.0)?))
}

fn check_poisson_exact() -> Result<f64> {
    let bundle = flip_bundle(0.5)?;
    let rho0 = plus_state();
    let terms = dyson_terms(&bundle, &rho0, 2.0, 12)?;
    let mean = 0.5 * 2.0;
    Ok(terms
        .iter()
        .enumerate()
        .map(|(n, term)| (term.trace().re - poisson_pmf(mean, n)).abs())
        .fold(0.0, f64::max))
}

fn check_completeness() -> Result<f64> {
    let bundle = flip_bundle(0.5)?;
    let rho0 = plus_state();
    let sigma = [0usize];
    let reports = counting_distribution(&bundle, &rho0, (0.0, 2.0), &sigma, 12)?;
    let total: f64 = reports.iter().map(|r| r.probability).sum();
    Ok((total - 1.0).abs())
}

fn check_zero_event_visibility() -> Result<f64> {
    let scenario = which_way_scenario();
    let grid = aligned_grid(64, scenario.v2.re * scenario.transit_time);
    let pattern = interference_pattern(&scenario, &beam_splitter_input(), &grid)?;
    Ok((pattern.coherent_visibility - 1.0).abs())
}

fn check_background_flat() -> Result<f64> {
    let scenario = which_way_scenario();
    let grid = aligned_grid(64, scenario.v2.re * scenario.transit_time);
    let pattern = interference_pattern(&scenario, &beam_splitter_input(), &grid)?;
    let hi = pattern.background.iter().cloned().fold(f64::MIN, f64::max);
    let lo = pattern.background.iter().cloned().fold(f64::MAX, f64::min);
    Ok(hi - lo)
}

fn check_refractive() -> Result<f64> {
    let nu = 0.8;
    let h_nu = 2.0 * std::f64::consts::PI * nu;
    let cases = [
        (Complex64::new(0.0, 0.0), 1.0),
        (Complex64::new(0.75 * h_nu, 0.0), 0.5),
        (Complex64::new(-3.0 * h_nu, 0.0), 2.0),
    ];
    let mut worst = 0.0_f64;
    for (v, expected) in cases {
        let out = refractive_index(&OpticsModel::uniform(v, nu))?;
        worst = worst.max((out.indices[0] - Complex64::new(expected, 0.0)).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_battery_passes_at_default_bounds() {
        let checks = run_checks(None).unwrap();
        assert_eq!(checks.len(), CHECKS.len());
        for check in &checks {
            assert!(
                check.measured <= check.bound,
                "{}/{} measured {:.3e} above bound {:.3e}",
                check.module,
                check.name,
                check.measured,
                check.bound
            );
        }
    }

    #[test]
    fn filter_selects_by_module_substring() {
        let checks = run_checks(Some("generator")).unwrap();
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(|c| c.module == "generator"));
    }
}
