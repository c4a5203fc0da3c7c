//! Jump-process decomposition of the semigroup: the no-jump contraction,
//! exact count-resolved Dyson subcollections, counting probabilities with
//! their effects and conditional repreparation, and Monte Carlo wavefunction
//! trajectories as an independent stochastic cross-check.
//!
//! Counting is computed exactly by a block-bidiagonal generator over event
//! counts `0..=n_max`: each diagonal block is the full generator minus the
//! counted sandwich terms (uncounted channels stay folded in, which
//! marginalizes over them), each subdiagonal block is the counted sandwich,
//! and one dense exponential of the stacked generator yields every
//! subcollection at once.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::algebra::{expm, ComplexMatrix, SuperoperatorMatrix};
use crate::error::CoreError;
use crate::fock::MicroState;
use crate::generator::GeneratorBundle;
use crate::lindblad::{effective_hamiltonian, liouvillian};
use crate::tol;
use crate::Result;

/// Number of equal time segments the trajectory sampler walks between
/// exact exponential steps; jump times are refined by bisection inside a
/// segment, so this only sets the coarse search resolution.
const SAMPLER_SEGMENTS: usize = 256;

/// Bisection iterations used to localize a norm-threshold crossing inside
/// one sampler segment (interval shrinks by 2^-48, far below f64 spacing
/// on any segment of interest).
const BISECTION_ITERS: usize = 48;

/// The no-event contraction over a time window: `rho -> U rho U^dag` with
/// `U = exp(-i (H - iA) dt)`. Trace non-increasing, purity preserving on
/// pure inputs.
#[derive(Debug, Clone)]
pub struct NoJumpMap {
    propagator: ComplexMatrix,
}

impl NoJumpMap {
    /// The non-unitary propagator `U` itself.
    pub fn propagator(&self) -> &ComplexMatrix {
        &self.propagator
    }

    /// Apply the contraction to a density matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.propagator.rows();
        if rho.rows() != d || rho.cols() != d {
            return Err(CoreError::Dimension {
                context: "no-jump map input".to_string(),
                got: format!("{}x{}", rho.rows(), rho.cols()),
                expected: format!("{d}x{d}"),
            });
        }
        Ok(&(&self.propagator * rho) * &self.propagator.adjoint())
    }

    /// Apply the underlying propagator to a ket.
    pub fn apply_ket(&self, psi: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.propagator.rows();
        if psi.rows() != d || psi.cols() != 1 {
            return Err(CoreError::Dimension {
                context: "no-jump map ket input".to_string(),
                got: format!("{}x{}", psi.rows(), psi.cols()),
                expected: format!("{d}x1"),
            });
        }
        Ok(&self.propagator * psi)
    }

    /// Compose with an earlier window: `(self o inner)(rho)` applies
    /// `inner` first. For windows `[t1,t2]` and `[t2,t3]` of the same
    /// bundle this reproduces the single window `[t1,t3]`.
    pub fn compose(&self, inner: &NoJumpMap) -> Result<NoJumpMap> {
        if self.propagator.rows() != inner.propagator.rows() {
            return Err(CoreError::Dimension {
                context: "no-jump map composition".to_string(),
                got: format!("{}", inner.propagator.rows()),
                expected: format!("{}", self.propagator.rows()),
            });
        }
        Ok(NoJumpMap {
            propagator: &self.propagator * &inner.propagator,
        })
    }
}

/// Build the no-event contraction for the window `[t1, t2]`.
pub fn no_jump_propagator(bundle: &GeneratorBundle, t1: f64, t2: f64) -> Result<NoJumpMap> {
    if !t1.is_finite() || !t2.is_finite() || t2 < t1 {
        return Err(CoreError::Domain(format!(
            "no-jump window must satisfy t2 >= t1 with finite endpoints, got [{t1}, {t2}]"
        )));
    }
    let dt = t2 - t1;
    let heff = effective_hamiltonian(bundle);
    let propagator = expm(&heff.scale(Complex64::new(0.0, -dt)))?;
    Ok(NoJumpMap { propagator })
}

/// Count-resolved propagator: `exp(G dt)` for the block-bidiagonal
/// generator whose n-th diagonal block drifts without counted events and
/// whose subdiagonal injects one counted event.
struct CountPropagator {
    d: usize,
    n_max: usize,
    big: ComplexMatrix,
}

impl CountPropagator {
    /// The `(row, col)` block as a map on stacked operators.
    fn block(&self, row: usize, col: usize) -> ComplexMatrix {
        let dd = self.d * self.d;
        ComplexMatrix::from_fn(dd, dd, |r, c| self.big[(row * dd + r, col * dd + c)])
    }

    /// Evolve an initial state sitting in the zero-count block and return
    /// the subcollection operators indexed by event count.
    fn terms(&self, rho0: &ComplexMatrix) -> Vec<ComplexMatrix> {
        let dd = self.d * self.d;
        let stacked = rho0.to_stacked();
        let mut v0 = ComplexMatrix::zeros((self.n_max + 1) * dd, 1);
        for i in 0..dd {
            v0[(i, 0)] = stacked[(i, 0)];
        }
        let v = &self.big * &v0;
        (0..=self.n_max)
            .map(|n| {
                let block = ComplexMatrix::from_fn(dd, 1, |i, _| v[(n * dd + i, 0)]);
                ComplexMatrix::from_stacked(&block, self.d, self.d)
            })
            .collect()
    }
}

/// Sorted, deduplicated channel indices with bounds checking.
fn normalize_sigma(sigma: &[usize], channel_count: usize) -> Result<Vec<usize>> {
    let mut indices = sigma.to_vec();
    indices.sort_unstable();
    indices.dedup();
    if let Some(&bad) = indices.iter().find(|&&j| j >= channel_count) {
        return Err(CoreError::Domain(format!(
            "channel subset index {bad} out of range (bundle has {channel_count} channels)"
        )));
    }
    Ok(indices)
}

fn copy_block(target: &mut ComplexMatrix, source: &ComplexMatrix, row0: usize, col0: usize) {
    for r in 0..source.rows() {
        for c in 0..source.cols() {
            target[(row0 + r, col0 + c)] = source[(r, c)];
        }
    }
}

/// Assemble and exponentiate the count-resolved generator for the counted
/// channel subset `sigma` over a window of length `dt`.
fn count_propagator(
    bundle: &GeneratorBundle,
    sigma: &[usize],
    n_max: usize,
    dt: f64,
) -> Result<CountPropagator> {
    if n_max > tol::MAX_COUNT {
        return Err(CoreError::Cost {
            context: "count-resolved truncation".to_string(),
            requested: n_max,
            cap: tol::MAX_COUNT,
        });
    }
    if !dt.is_finite() || dt < 0.0 {
        return Err(CoreError::Domain(format!(
            "counting window length must be nonnegative and finite, got {dt}"
        )));
    }
    let indices = normalize_sigma(sigma, bundle.channels().len())?;
    let d = bundle.d_s();
    let dd = d * d;
    let dim = (n_max + 1) * dd;
    if dim > tol::MAX_TENSOR_DIM {
        return Err(CoreError::Size {
            context: "count-resolved generator".to_string(),
            dim,
            cap: tol::MAX_TENSOR_DIM,
        });
    }
    let full = liouvillian(bundle)?;
    let mut jump = SuperoperatorMatrix::zero(d);
    for &j in &indices {
        let channel = &bundle.channels().channels()[j];
        jump = jump.add(
            &SuperoperatorMatrix::sandwich(&channel.matrix)?
                .scale(Complex64::new(channel.weight, 0.0)),
        );
    }
    let drift = full.matrix() - jump.matrix();
    let mut generator = ComplexMatrix::zeros(dim, dim);
    for b in 0..=n_max {
        copy_block(&mut generator, &drift, b * dd, b * dd);
        if b > 0 {
            copy_block(&mut generator, jump.matrix(), b * dd, (b - 1) * dd);
        }
    }
    let big = expm(&generator.scale_re(dt))?;
    Ok(CountPropagator { d, n_max, big })
}

/// Dyson subcollection operators for counts `0..=n_max` over `[0, t]`,
/// counting every channel. Term `k` is the k-event contribution to the
/// evolved state; their traces are the count probabilities, their sum
/// converges to the full propagation as `n_max` saturates the count
/// distribution.
pub fn dyson_terms(
    bundle: &GeneratorBundle,
    rho0: &ComplexMatrix,
    t: f64,
    n_max: usize,
) -> Result<Vec<ComplexMatrix>> {
    let d = bundle.d_s();
    if rho0.rows() != d || rho0.cols() != d {
        return Err(CoreError::Dimension {
            context: "Dyson initial state".to_string(),
            got: format!("{}x{}", rho0.rows(), rho0.cols()),
            expected: format!("{d}x{d}"),
        });
    }
    let all: Vec<usize> = (0..bundle.channels().len()).collect();
    let cp = count_propagator(bundle, &all, n_max, t)?;
    Ok(cp.terms(rho0))
}

/// Per-count detection probabilities for a final pure outcome `alpha_ket`,
/// together with the zero-event survival probability `Tr(term_0)`.
#[derive(Debug, Clone)]
pub struct OutcomeProbabilities {
    /// `p_alpha^(k) = <alpha| term_k |alpha>` for `k = 0..=n_max`.
    pub per_count: Vec<f64>,
    /// `p0 = Tr(term_0)`: the probability that no event occurred.
    pub zero_event: f64,
}

/// Resolve the evolved state into per-count outcome probabilities against
/// a normalized ket.
pub fn outcome_probability(
    bundle: &GeneratorBundle,
    rho0: &ComplexMatrix,
    t: f64,
    alpha_ket: &ComplexMatrix,
    n_max: usize,
) -> Result<OutcomeProbabilities> {
    let d = bundle.d_s();
    if alpha_ket.rows() != d || alpha_ket.cols() != 1 {
        return Err(CoreError::Dimension {
            context: "outcome ket".to_string(),
            got: format!("{}x{}", alpha_ket.rows(), alpha_ket.cols()),
            expected: format!("{d}x1"),
        });
    }
    if (alpha_ket.norm_sqr() - 1.0).abs() > tol::STATE_TRACE_TOL {
        return Err(CoreError::Domain(format!(
            "outcome ket must be normalized, got norm^2 = {:.12}",
            alpha_ket.norm_sqr()
        )));
    }
    let terms = dyson_terms(bundle, rho0, t, n_max)?;
    let per_count = terms
        .iter()
        .map(|term| alpha_ket.inner(&(term * alpha_ket)).re)
        .collect();
    let zero_event = terms[0].trace().re;
    Ok(OutcomeProbabilities {
        per_count,
        zero_event,
    })
}

/// A counting question: how likely are exactly `n_events` jumps from the
/// channel subset `sigma` during `interval`, and what does the answer do
/// to the state?
#[derive(Debug, Clone)]
pub struct CountingQuery {
    /// Observation window `[tau1, tau2]`.
    pub interval: (f64, f64),
    /// Number of counted events asked about.
    pub n_events: usize,
    /// Indices into the bundle's channel list that increment the counter;
    /// all other channels keep acting but are not counted.
    pub sigma: Vec<usize>,
    /// Count-resolution truncation (capped at `tol::MAX_COUNT`).
    pub n_max: usize,
}

impl CountingQuery {
    /// Check the query against a bundle's channel count.
    pub fn validate(&self, channel_count: usize) -> Result<()> {
        let (t1, t2) = self.interval;
        if !t1.is_finite() || !t2.is_finite() || t2 <= t1 {
            return Err(CoreError::Domain(format!(
                "counting interval must satisfy tau2 > tau1, got [{t1}, {t2}]"
            )));
        }
        if self.n_events > 0 && self.sigma.is_empty() {
            return Err(CoreError::Domain(format!(
                "counting {} events requires a nonempty channel subset",
                self.n_events
            )));
        }
        if self.n_events > self.n_max {
            return Err(CoreError::Domain(format!(
                "requested count {} exceeds the resolution n_max = {}",
                self.n_events, self.n_max
            )));
        }
        if self.n_max > tol::MAX_COUNT {
            return Err(CoreError::Cost {
                context: "counting query truncation".to_string(),
                requested: self.n_max,
                cap: tol::MAX_COUNT,
            });
        }
        normalize_sigma(&self.sigma, channel_count)?;
        Ok(())
    }
}

/// The answer to a counting question: probability, the effect operator
/// testing it on the window's initial state, and the conditional state
/// after the observation (absent when the probability is below floor).
#[derive(Debug, Clone)]
pub struct EffectReport {
    /// `P = Tr(F_map(rho))`, clamped to `[0, 1]` against roundoff.
    pub probability: f64,
    /// Effect operator `F`: Hermitian with `0 <= F <= I`, satisfying
    /// `P = Tr(F rho)` for every input state.
    pub effect: ComplexMatrix,
    /// Normalized repreparation `F_map(rho)/P`; `None` when the
    /// probability is at or below `tol::PROBABILITY_FLOOR`.
    pub conditional_state: Option<MicroState>,
    /// Set when the probability was too small to condition on.
    pub below_floor: bool,
}

fn effect_report(cp: &CountPropagator, rho: &ComplexMatrix, n: usize) -> Result<EffectReport> {
    let d = cp.d;
    let s_n = cp.block(n, 0);
    let mapped = ComplexMatrix::from_stacked(&(&s_n * &rho.to_stacked()), d, d);
    let p_raw = mapped.trace().re;
    let probability = p_raw.clamp(0.0, 1.0);
    let identity_stacked = ComplexMatrix::identity(d).to_stacked();
    let effect =
        ComplexMatrix::from_stacked(&(&s_n.adjoint() * &identity_stacked), d, d).hermitian_part();
    let below_floor = probability <= tol::PROBABILITY_FLOOR;
    let conditional_state = if below_floor {
        None
    } else {
        Some(MicroState::new(
            mapped.scale_re(1.0 / p_raw).hermitian_part(),
        )?)
    };
    Ok(EffectReport {
        probability,
        effect,
        conditional_state,
        below_floor,
    })
}

/// Evaluate a counting question on the state at the start of the window.
///
/// Only channels in `sigma` increment the counter; the rest keep acting
/// unobserved (their sandwiches stay in the drift blocks), so the result
/// is the marginal count distribution.
pub fn counting_probability(
    bundle: &GeneratorBundle,
    rho_at_start: &ComplexMatrix,
    query: &CountingQuery,
) -> Result<EffectReport> {
    query.validate(bundle.channels().len())?;
    let d = bundle.d_s();
    if rho_at_start.rows() != d || rho_at_start.cols() != d {
        return Err(CoreError::Dimension {
            context: "counting input state".to_string(),
            got: format!("{}x{}", rho_at_start.rows(), rho_at_start.cols()),
            expected: format!("{d}x{d}"),
        });
    }
    let dt = query.interval.1 - query.interval.0;
    let cp = count_propagator(bundle, &query.sigma, query.n_max, dt)?;
    effect_report(&cp, rho_at_start, query.n_events)
}

/// The full count distribution `N = 0..=n_max` for one window, sharing a
/// single count-resolved exponential across all counts.
pub fn counting_distribution(
    bundle: &GeneratorBundle,
    rho_at_start: &ComplexMatrix,
    interval: (f64, f64),
    sigma: &[usize],
    n_max: usize,
) -> Result<Vec<EffectReport>> {
    let (t1, t2) = interval;
    if !t1.is_finite() || !t2.is_finite() || t2 <= t1 {
        return Err(CoreError::Domain(format!(
            "counting interval must satisfy tau2 > tau1, got [{t1}, {t2}]"
        )));
    }
    let d = bundle.d_s();
    if rho_at_start.rows() != d || rho_at_start.cols() != d {
        return Err(CoreError::Dimension {
            context: "counting input state".to_string(),
            got: format!("{}x{}", rho_at_start.rows(), rho_at_start.cols()),
            expected: format!("{d}x{d}"),
        });
    }
    let cp = count_propagator(bundle, sigma, n_max, t2 - t1)?;
    (0..=n_max)
        .map(|n| effect_report(&cp, rho_at_start, n))
        .collect()
}

/// One jump event on a trajectory record.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    /// Absolute event time within the sampled window.
    pub time: f64,
    /// Index into the bundle's channel list.
    pub channel: usize,
    /// System-transition label of the fired channel.
    pub bath_level: usize,
    /// Environment-state label of the fired channel.
    pub bath_state: usize,
}

/// One Monte Carlo wavefunction trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Master seed shared by the whole batch.
    pub seed: u64,
    /// Counter-based stream index (the trajectory's position in the batch).
    pub stream: u64,
    /// Jump record with strictly increasing times.
    pub events: Vec<JumpEvent>,
    /// Normalized state at the end of the window (at the absorption time
    /// for non-surviving trajectories).
    pub final_ket: ComplexMatrix,
    /// False when the trajectory was absorbed: in raw mode the loss
    /// operator can exceed the channel feedback, and the excess is an
    /// absorbing branch that removes the trajectory from the ensemble.
    pub survived: bool,
}

fn positive_uniform(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x > 0.0 {
            return x;
        }
    }
}

fn decay_step(heff: &ComplexMatrix, psi: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    Ok(&expm(&heff.scale(Complex64::new(0.0, -dt)))? * psi)
}

fn run_trajectory(
    bundle: &GeneratorBundle,
    heff: &ComplexMatrix,
    u_step: &ComplexMatrix,
    step: f64,
    psi0: &ComplexMatrix,
    t: f64,
    master_seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    let channels = bundle.channels().channels();
    let mut psi = psi0.clone();
    let mut events = Vec::new();
    let mut survived = true;
    let mut cur = 0.0;
    let mut threshold = positive_uniform(&mut rng);
    while cur < t {
        let remaining = t - cur;
        let (seg, candidate) = if remaining >= step && step > 0.0 {
            (step, u_step * &psi)
        } else {
            (remaining, decay_step(heff, &psi, remaining)?)
        };
        if candidate.norm_sqr() > threshold {
            psi = candidate;
            cur += seg;
            continue;
        }
        // The squared norm crossed the survival threshold inside this
        // segment; localize the crossing by bisection (the norm is
        // monotone for positive semidefinite loss operators).
        let mut lo = 0.0;
        let mut hi = seg;
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if decay_step(heff, &psi, mid)?.norm_sqr() > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = hi;
        let jump_time = cur + tau;
        let psi_hat = decay_step(heff, &psi, tau)?.normalized()?;
        let weights: Vec<f64> = channels
            .iter()
            .map(|ch| ch.weight * (&ch.matrix * &psi_hat).norm_sqr())
            .collect();
        let total_weight: f64 = weights.iter().sum();
        let loss = 2.0 * psi_hat.inner(&(bundle.a() * &psi_hat)).re;
        let mut p_absorb = if loss > 0.0 {
            (1.0 - total_weight / loss).max(0.0)
        } else {
            0.0
        };
        if p_absorb < tol::ABSORPTION_CLAMP {
            p_absorb = 0.0;
        }
        if p_absorb > 0.0 && rng.gen::<f64>() < p_absorb {
            survived = false;
            psi = psi_hat;
            break;
        }
        if total_weight <= 0.0 {
            // The decay that triggered the crossing has no jump carrier
            // left; nothing can fire, so the trajectory is absorbed.
            survived = false;
            psi = psi_hat;
            break;
        }
        let draw = rng.gen::<f64>() * total_weight;
        let mut acc = 0.0;
        let mut pick = channels.len() - 1;
        for (j, w) in weights.iter().enumerate() {
            acc += w;
            if draw < acc {
                pick = j;
                break;
            }
        }
        let channel = &channels[pick];
        events.push(JumpEvent {
            time: jump_time,
            channel: pick,
            bath_level: channel.bath_level,
            bath_state: channel.bath_state,
        });
        psi = (&channel.matrix * &psi_hat).normalized()?;
        cur = jump_time;
        threshold = positive_uniform(&mut rng);
    }
    let final_ket = if survived { psi.normalized()? } else { psi };
    Ok(Trajectory {
        seed: master_seed,
        stream,
        events,
        final_ket,
        survived,
    })
}

/// Deterministic order-independent reduction: sum by recursive halving so
/// the result does not depend on how work was scheduled.
fn pairwise_sum(items: &[ComplexMatrix], d: usize) -> ComplexMatrix {
    match items.len() {
        0 => ComplexMatrix::zeros(d, d),
        1 => items[0].clone(),
        n => {
            let (a, b) = items.split_at(n / 2);
            &pairwise_sum(a, d) + &pairwise_sum(b, d)
        }
    }
}

/// Sample jump trajectories from a pure initial state and return them
/// together with the ensemble-averaged density matrix.
///
/// Each trajectory owns an independent counter-based RNG stream keyed by
/// `(seed, index)`, so batches are bitwise reproducible regardless of the
/// parallel schedule. Surviving trajectories contribute their normalized
/// final dyad; absorbed ones contribute nothing, which realizes the trace
/// decay of raw-mode bundles.
pub fn sample_trajectories(
    bundle: &GeneratorBundle,
    psi0: &ComplexMatrix,
    t: f64,
    n_traj: usize,
    seed: u64,
) -> Result<(Vec<Trajectory>, ComplexMatrix)> {
    let d = bundle.d_s();
    if psi0.rows() != d || psi0.cols() != 1 {
        return Err(CoreError::Dimension {
            context: "trajectory initial ket".to_string(),
            got: format!("{}x{}", psi0.rows(), psi0.cols()),
            expected: format!("{d}x1"),
        });
    }
    if (psi0.norm_sqr() - 1.0).abs() > tol::STATE_TRACE_TOL {
        return Err(CoreError::Domain(format!(
            "trajectory initial ket must be normalized, got norm^2 = {:.12}",
            psi0.norm_sqr()
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(CoreError::Domain(format!(
            "trajectory window must be nonnegative and finite, got {t}"
        )));
    }
    if n_traj == 0 {
        return Err(CoreError::Domain(
            "a trajectory batch needs at least one trajectory".to_string(),
        ));
    }
    let heff = effective_hamiltonian(bundle);
    let step = t / SAMPLER_SEGMENTS as f64;
    let u_step = expm(&heff.scale(Complex64::new(0.0, -step)))?;
    let trajectories: Vec<Trajectory> = (0..n_traj as u64)
        .into_par_iter()
        .map(|stream| run_trajectory(bundle, &heff, &u_step, step, psi0, t, seed, stream))
        .collect::<Result<Vec<_>>>()?;
    let dyads: Vec<ComplexMatrix> = trajectories
        .iter()
        .map(|tr| {
            if tr.survived {
                tr.final_ket.dyad()
            } else {
                ComplexMatrix::zeros(d, d)
            }
        })
        .collect();
    let averaged = pairwise_sum(&dyads, d).scale_re(1.0 / n_traj as f64);
    Ok((trajectories, averaged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::eigh;
    use crate::demo;
    use crate::fock::build_sectors;
    use crate::generator::{Channel, GeneratorMode};
    use crate::lindblad::{evolve_ket, propagate};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus_ket() -> ComplexMatrix {
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::ket(&[c(amp, 0.0), c(amp, 0.0)])
    }

    /// Amplitude damping: single channel sqrt(gamma) |0><1|, enforced.
    fn damping_bundle(gamma: f64) -> GeneratorBundle {
        let l = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 {
                c(gamma.sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let a = (&l.adjoint() * &l).scale_re(0.5);
        GeneratorBundle::from_parts(
            &ComplexMatrix::zeros(2, 2),
            &a,
            vec![Channel {
                weight: 1.0,
                matrix: l,
                bath_level: 0,
                bath_state: 0,
            }],
            GeneratorMode::TraceEnforced,
        )
        .unwrap()
    }

    /// Bit flip at uniform rate: L = sqrt(gamma) sigma_x, so L^dag L =
    /// gamma I and the count process is exactly Poissonian.
    fn flip_bundle(gamma: f64) -> GeneratorBundle {
        let l = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i != j {
                c(gamma.sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let a = (&l.adjoint() * &l).scale_re(0.5);
        GeneratorBundle::from_parts(
            &ComplexMatrix::zeros(2, 2),
            &a,
            vec![Channel {
                weight: 1.0,
                matrix: l,
                bath_level: 0,
                bath_state: 0,
            }],
            GeneratorMode::TraceEnforced,
        )
        .unwrap()
    }

    /// Two uniform-rate channels whose counts are independent Poisson
    /// processes: L0 = sqrt(g0) I and L1 = sqrt(g1) sigma_x.
    fn two_poisson_bundle(g0: f64, g1: f64) -> GeneratorBundle {
        let l0 = ComplexMatrix::identity(2).scale_re(g0.sqrt());
        let l1 = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i != j {
                c(g1.sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let a = (&(&l0.adjoint() * &l0) + &(&l1.adjoint() * &l1)).scale_re(0.5);
        GeneratorBundle::from_parts(
            &ComplexMatrix::zeros(2, 2),
            &a,
            vec![
                Channel {
                    weight: 1.0,
                    matrix: l0,
                    bath_level: 0,
                    bath_state: 0,
                },
                Channel {
                    weight: 1.0,
                    matrix: l1,
                    bath_level: 1,
                    bath_state: 0,
                },
            ],
            GeneratorMode::TraceEnforced,
        )
        .unwrap()
    }

    /// Projective channel sqrt(gamma) |1><1| with a diagonal Hamiltonian:
    /// the one case where conditioning reduces exactly to a projection.
    fn projector_bundle(gamma: f64, h_levels: (f64, f64)) -> GeneratorBundle {
        let l = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 {
                c(gamma.sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let h = ComplexMatrix::diag_real(&[h_levels.0, h_levels.1]);
        let a = (&l.adjoint() * &l).scale_re(0.5);
        GeneratorBundle::from_parts(
            &h,
            &a,
            vec![Channel {
                weight: 1.0,
                matrix: l,
                bath_level: 0,
                bath_state: 0,
            }],
            GeneratorMode::TraceEnforced,
        )
        .unwrap()
    }

    /// Hamiltonian-only bundle (no channels, no loss).
    fn unitary_bundle() -> GeneratorBundle {
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.4, 0.0), c(0.1, -0.2)],
            vec![c(0.1, 0.2), c(-0.3, 0.0)],
        ]);
        GeneratorBundle::from_parts(
            &h,
            &ComplexMatrix::zeros(2, 2),
            Vec::new(),
            GeneratorMode::TraceEnforced,
        )
        .unwrap()
    }

    fn demo_bundle() -> GeneratorBundle {
        let model = demo::demo_standard();
        let bath = demo::demo_bath(&model, 1.0).unwrap();
        let sec = build_sectors(&model).unwrap();
        GeneratorBundle::build(&sec, &bath, 0.75, GeneratorMode::TraceEnforced).unwrap()
    }

    /// Deterministic Hermitian test matrix with unit trace.
    fn probe_state(p: f64, q: f64) -> ComplexMatrix {
        let m = demo::frozen_matrix(2, p, q, 1.0);
        let psd = &m.adjoint() * &m;
        let tr = psd.trace().re;
        psd.scale_re(1.0 / tr)
    }

    fn poisson_pmf(k: usize, mean: f64) -> f64 {
        let mut log_fact = 0.0;
        for i in 1..=k {
            log_fact += (i as f64).ln();
        }
        ((k as f64) * mean.ln() - mean - log_fact).exp()
    }

    #[test]
    fn no_jump_map_is_unitary_without_loss() {
        let bundle = unitary_bundle();
        let map = no_jump_propagator(&bundle, 0.2, 1.5).unwrap();
        let rho = probe_state(0.8, 1.7);
        let out = map.apply(&rho).unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        // Purity is preserved because U is unitary.
        let purity_in = (&rho * &rho).trace().re;
        let purity_out = (&out * &out).trace().re;
        assert!((purity_in - purity_out).abs() < 1e-12);
    }

    #[test]
    fn no_jump_trace_matches_ket_norm() {
        let bundle = damping_bundle(0.9);
        let map = no_jump_propagator(&bundle, 0.0, 1.1).unwrap();
        let psi = plus_ket();
        let rho = psi.dyad();
        let evolved = map.apply(&rho).unwrap();
        let ket = map.apply_ket(&psi).unwrap();
        assert!((evolved.trace().re - ket.norm_sqr()).abs() < 1e-13);
        assert!(evolved.trace().re < 1.0);
    }

    #[test]
    fn no_jump_windows_compose() {
        let bundle = damping_bundle(0.7);
        let a21 = no_jump_propagator(&bundle, 0.3, 0.9).unwrap();
        let a32 = no_jump_propagator(&bundle, 0.9, 1.4).unwrap();
        let a31 = no_jump_propagator(&bundle, 0.3, 1.4).unwrap();
        let composed = a32.compose(&a21).unwrap();
        assert!(
            composed
                .propagator()
                .max_abs_diff(a31.propagator())
                < 1e-10
        );
        assert!(no_jump_propagator(&bundle, 1.0, 0.5).is_err());
    }

    #[test]
    fn dyson_reduces_to_propagation_without_channels() {
        let bundle = unitary_bundle();
        let rho = probe_state(1.3, 0.6);
        let terms = dyson_terms(&bundle, &rho, 1.7, 3).unwrap();
        let direct = propagate(&bundle, &rho, 1.7).unwrap();
        assert!(terms[0].max_abs_diff(&direct) < 1e-12);
        for term in &terms[1..] {
            assert!(term.max_norm() < 1e-14);
        }
    }

    #[test]
    fn dyson_terms_resum_to_the_full_propagator() {
        let bundle = flip_bundle(0.5);
        let rho = probe_state(0.9, 2.1);
        let t = 2.0;
        let terms = dyson_terms(&bundle, &rho, t, 12).unwrap();
        let mut sum = ComplexMatrix::zeros(2, 2);
        let mut trace_sum = 0.0;
        for term in &terms {
            sum = &sum + term;
            trace_sum += term.trace().re;
            // Decomposition positivity: every subcollection is PSD.
            let eig = eigh(&term.hermitian_part()).unwrap();
            assert!(eig.values[0] >= -1e-10);
        }
        assert!(trace_sum <= 1.0 + 1e-12);
        assert!(1.0 - trace_sum < 1e-10, "tail mass {}", 1.0 - trace_sum);
        let direct = propagate(&bundle, &rho, t).unwrap();
        assert!(sum.max_abs_diff(&direct) < 1e-9);
    }

    #[test]
    fn uniform_rate_counts_are_poisson() {
        // L^dag L = gamma I makes the count process Poisson with mean
        // gamma * t regardless of the state.
        let gamma = 0.5;
        let t = 2.0;
        let bundle = flip_bundle(gamma);
        let rho = probe_state(1.1, 0.3);
        let terms = dyson_terms(&bundle, &rho, t, 12).unwrap();
        for (k, term) in terms.iter().enumerate() {
            let expected = poisson_pmf(k, gamma * t);
            assert!(
                (term.trace().re - expected).abs() < 1e-10,
                "count {k}: {} vs {}",
                term.trace().re,
                expected
            );
        }
    }

    #[test]
    fn count_truncation_cap_is_enforced() {
        let bundle = flip_bundle(0.5);
        let rho = probe_state(1.0, 1.0);
        match dyson_terms(&bundle, &rho, 1.0, 13) {
            Err(CoreError::Cost { requested, cap, .. }) => {
                assert_eq!(requested, 13);
                assert_eq!(cap, tol::MAX_COUNT);
            }
            other => panic!("expected cost error, got {other:?}"),
        }
    }

    #[test]
    fn outcome_probabilities_resolve_term_traces() {
        let bundle = demo_bundle();
        let rho = probe_state(0.7, 1.9);
        let t = 2.0;
        let n_max = 3;
        let terms = dyson_terms(&bundle, &rho, t, n_max).unwrap();
        let basis: Vec<ComplexMatrix> = (0..2).map(|i| ComplexMatrix::basis_ket(2, i)).collect();
        let outcomes: Vec<OutcomeProbabilities> = basis
            .iter()
            .map(|ket| outcome_probability(&bundle, &rho, t, ket, n_max).unwrap())
            .collect();
        for k in 0..=n_max {
            let resolved: f64 = outcomes.iter().map(|o| o.per_count[k]).sum();
            assert!((resolved - terms[k].trace().re).abs() < 1e-12);
        }
        assert!((outcomes[0].zero_event - terms[0].trace().re).abs() < 1e-14);
    }

    #[test]
    fn pure_outcome_without_channels_is_the_overlap() {
        let bundle = unitary_bundle();
        let psi = plus_ket();
        let alpha = ComplexMatrix::basis_ket(2, 0);
        let out = outcome_probability(&bundle, &psi.dyad(), 1.3, &alpha, 2).unwrap();
        let evolved = evolve_ket(&bundle, &psi, 1.3).unwrap();
        let overlap = alpha.inner(&evolved).norm_sqr();
        assert!((out.per_count[0] - overlap).abs() < 1e-12);
        assert!(out.per_count[1].abs() < 1e-14);
    }

    #[test]
    fn zero_event_probability_is_non_increasing() {
        let bundle = damping_bundle(0.9);
        let rho = plus_ket().dyad();
        let mut previous = f64::INFINITY;
        for i in 0..100 {
            let t = 3.0 * (i as f64) / 99.0;
            let terms = dyson_terms(&bundle, &rho, t, 0).unwrap();
            let p0 = terms[0].trace().re;
            assert!(p0 <= previous + 1e-12, "p0 rose at t = {t}");
            previous = p0;
        }
    }

    #[test]
    fn zero_event_probability_matches_ket_norm() {
        let bundle = damping_bundle(0.7);
        let psi = plus_ket();
        let t = 1.3;
        let out = outcome_probability(&bundle, &psi.dyad(), t, &ComplexMatrix::basis_ket(2, 0), 2)
            .unwrap();
        let surviving = evolve_ket(&bundle, &psi, t).unwrap();
        assert!((out.zero_event - surviving.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn counting_query_validation_rejects_bad_requests() {
        let bundle = flip_bundle(0.4);
        let rho = probe_state(0.5, 0.5);
        let base = CountingQuery {
            interval: (0.0, 1.0),
            n_events: 1,
            sigma: vec![0],
            n_max: 4,
        };
        let mut bad = base.clone();
        bad.interval = (1.0, 1.0);
        assert!(counting_probability(&bundle, &rho, &bad).is_err());
        let mut bad = base.clone();
        bad.sigma = Vec::new();
        assert!(counting_probability(&bundle, &rho, &bad).is_err());
        let mut bad = base.clone();
        bad.sigma = vec![5];
        assert!(counting_probability(&bundle, &rho, &bad).is_err());
        let mut bad = base.clone();
        bad.n_events = 6;
        assert!(counting_probability(&bundle, &rho, &bad).is_err());
        let mut bad = base.clone();
        bad.n_max = tol::MAX_COUNT + 1;
        assert!(matches!(
            counting_probability(&bundle, &rho, &bad),
            Err(CoreError::Cost { .. })
        ));
        assert!(counting_probability(&bundle, &rho, &base).is_ok());
    }

    #[test]
    fn zero_count_probability_matches_the_zero_event_trace() {
        let bundle = flip_bundle(0.5);
        let rho = probe_state(1.7, 0.2);
        let query = CountingQuery {
            interval: (0.5, 2.5),
            n_events: 0,
            sigma: vec![0],
            n_max: 6,
        };
        let report = counting_probability(&bundle, &rho, &query).unwrap();
        let terms = dyson_terms(&bundle, &rho, 2.0, 6).unwrap();
        assert!((report.probability - terms[0].trace().re).abs() < 1e-12);
    }

    #[test]
    fn uniform_rate_effects_are_poisson_multiples_of_identity() {
        let gamma = 0.5;
        let bundle = flip_bundle(gamma);
        let rho = probe_state(0.4, 1.2);
        let dt = 2.0;
        let reports = counting_distribution(&bundle, &rho, (0.0, dt), &[0], 8).unwrap();
        for (n, report) in reports.iter().take(4).enumerate() {
            let expected = poisson_pmf(n, gamma * dt);
            assert!((report.probability - expected).abs() < 1e-10);
            let target = ComplexMatrix::identity(2).scale_re(expected);
            assert!(report.effect.max_abs_diff(&target) < 1e-10);
            // The conditional state is a valid state.
            let cond = report.conditional_state.as_ref().unwrap();
            assert!((cond.rho1().trace().re - 1.0).abs() < 1e-10);
            // Probability rule: P = Tr(F rho) for the actual input.
            let via_effect = (&report.effect * &rho).trace().re;
            assert!((via_effect - report.probability).abs() < 1e-10);
        }
    }

    #[test]
    fn effects_form_a_resolution_of_identity() {
        let bundle = flip_bundle(0.5);
        let rho = probe_state(0.9, 0.9);
        let reports = counting_distribution(&bundle, &rho, (0.0, 2.0), &[0], 12).unwrap();
        let mut effect_sum = ComplexMatrix::zeros(2, 2);
        let mut prob_sum = 0.0;
        for report in &reports {
            effect_sum = &effect_sum + &report.effect;
            prob_sum += report.probability;
            // Each effect satisfies 0 <= F <= I.
            let eig = eigh(&report.effect).unwrap();
            assert!(eig.values[0] >= -1e-10);
            assert!(*eig.values.last().unwrap() <= 1.0 + 1e-9);
        }
        assert!(effect_sum.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-9);
        assert!((prob_sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counting_marginalizes_uncounted_channels() {
        // Counting only the uniform-rate channel L0 = sqrt(g0) I yields a
        // Poisson marginal unaffected by the second channel.
        let g0 = 0.4;
        let bundle = two_poisson_bundle(g0, 0.7);
        let rho = probe_state(1.5, 0.8);
        let dt = 1.5;
        let reports = counting_distribution(&bundle, &rho, (0.0, dt), &[0], 10).unwrap();
        for (n, report) in reports.iter().take(6).enumerate() {
            let expected = poisson_pmf(n, g0 * dt);
            assert!(
                (report.probability - expected).abs() < 1e-10,
                "marginal count {n}: {} vs {}",
                report.probability,
                expected
            );
        }
    }

    #[test]
    fn repreparation_matches_projective_collapse() {
        // With L proportional to a projector and a commuting Hamiltonian,
        // conditioning on one event is exactly the projective update, and
        // the reprepared state is stationary under further propagation.
        let gamma = 0.8;
        let dt = 1.2;
        let bundle = projector_bundle(gamma, (0.3, -0.4));
        let rho = probe_state(1.1, 0.4);
        let query = CountingQuery {
            interval: (0.0, dt),
            n_events: 1,
            sigma: vec![0],
            n_max: 8,
        };
        let report = counting_probability(&bundle, &rho, &query).unwrap();
        let p11 = rho[(1, 1)].re;
        let expected_p = p11 * gamma * dt * (-gamma * dt).exp();
        assert!((report.probability - expected_p).abs() < 1e-10);
        let projected = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == 1 && j == 1 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let cond = report.conditional_state.as_ref().unwrap();
        assert!(cond.rho1().max_abs_diff(&projected) < 1e-9);
        let propagated = propagate(&bundle, &projected, dt).unwrap();
        assert!(cond.rho1().max_abs_diff(&propagated) < 1e-9);
    }

    #[test]
    fn below_floor_probability_yields_no_conditional_state() {
        let bundle = flip_bundle(0.005);
        let rho = probe_state(0.6, 1.4);
        let query = CountingQuery {
            interval: (0.0, 1.0),
            n_events: 12,
            sigma: vec![0],
            n_max: 12,
        };
        let report = counting_probability(&bundle, &rho, &query).unwrap();
        assert!(report.probability <= tol::PROBABILITY_FLOOR);
        assert!(report.below_floor);
        assert!(report.conditional_state.is_none());
    }

    #[test]
    fn trajectories_are_deterministic_in_the_seed() {
        let bundle = damping_bundle(1.0);
        let psi = plus_ket();
        let (first, avg_first) = sample_trajectories(&bundle, &psi, 2.0, 8, 7).unwrap();
        let (second, avg_second) = sample_trajectories(&bundle, &psi, 2.0, 8, 7).unwrap();
        assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(second.iter()) {
            assert_eq!(a.events, b.events);
            assert_eq!(a.survived, b.survived);
            assert_eq!(a.final_ket.data(), b.final_ket.data());
        }
        assert_eq!(avg_first.data(), avg_second.data());
        // A different seed produces a different batch.
        let (third, _) = sample_trajectories(&bundle, &psi, 2.0, 8, 8).unwrap();
        let differs = first
            .iter()
            .zip(third.iter())
            .any(|(a, b)| a.events != b.events || a.final_ket.data() != b.final_ket.data());
        assert!(differs);
    }

    #[test]
    fn trajectories_without_channels_never_jump() {
        let bundle = unitary_bundle();
        let psi = plus_ket();
        let t = 1.9;
        let (trajectories, averaged) = sample_trajectories(&bundle, &psi, t, 4, 3).unwrap();
        for tr in &trajectories {
            assert!(tr.events.is_empty());
            assert!(tr.survived);
        }
        let evolved = evolve_ket(&bundle, &psi, t).unwrap().normalized().unwrap();
        assert!(averaged.max_abs_diff(&evolved.dyad()) < 1e-9);
    }

    #[test]
    fn event_times_are_strictly_increasing() {
        let bundle = flip_bundle(1.5);
        let psi = ComplexMatrix::basis_ket(2, 0);
        let (trajectories, _) = sample_trajectories(&bundle, &psi, 3.0, 32, 11).unwrap();
        let mut saw_multi = false;
        for tr in &trajectories {
            for pair in tr.events.windows(2) {
                assert!(pair[1].time > pair[0].time);
                saw_multi = true;
            }
            for event in &tr.events {
                assert!(event.time > 0.0 && event.time <= 3.0);
                assert_eq!(event.channel, 0);
            }
        }
        assert!(saw_multi, "expected at least one multi-jump trajectory");
    }

    #[test]
    fn averaged_trajectories_track_the_master_equation() {
        let gamma = 0.8;
        let t = 1.5;
        let n_traj = 4000;
        let bundle = damping_bundle(gamma);
        let psi = plus_ket();
        let (trajectories, averaged) = sample_trajectories(&bundle, &psi, t, n_traj, 17).unwrap();
        let exact = propagate(&bundle, &psi.dyad(), t).unwrap();
        // Compare the excited-state population against the master
        // equation within Monte Carlo error bars (sample standard error).
        let samples: Vec<f64> = trajectories
            .iter()
            .map(|tr| tr.final_ket[(1, 0)].norm_sqr())
            .collect();
        let mean: f64 = samples.iter().sum::<f64>() / n_traj as f64;
        let var: f64 =
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_traj as f64 - 1.0);
        let stderr = (var / n_traj as f64).sqrt().max(1e-6);
        assert!((averaged[(1, 1)].re - mean).abs() < 1e-12);
        assert!(
            (mean - exact[(1, 1)].re).abs() < 4.0 * stderr,
            "population {} vs exact {} (stderr {})",
            mean,
            exact[(1, 1)].re,
            stderr
        );
        assert!((averaged.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jump_histogram_matches_count_resolved_traces() {
        let gamma = 0.5;
        let t = 2.0;
        let n_traj = 2000;
        let bundle = flip_bundle(gamma);
        let psi = plus_ket();
        let (trajectories, _) = sample_trajectories(&bundle, &psi, t, n_traj, 2024).unwrap();
        let terms = dyson_terms(&bundle, &psi.dyad(), t, 12).unwrap();
        // Bins 0..=3 plus a pooled >=4 bin.
        let mut observed = [0.0_f64; 5];
        for tr in &trajectories {
            observed[tr.events.len().min(4)] += 1.0;
        }
        let mut expected = [0.0_f64; 5];
        for (k, term) in terms.iter().enumerate() {
            expected[k.min(4)] += term.trace().re * n_traj as f64;
        }
        expected[4] += (1.0 - terms.iter().map(|m| m.trace().re).sum::<f64>()) * n_traj as f64;
        let chi2: f64 = observed
            .iter()
            .zip(expected.iter())
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p_value = 1.0 - ChiSquared::new(4.0).unwrap().cdf(chi2);
        assert!(
            p_value > 0.01,
            "chi2 = {chi2} (p = {p_value}), observed {observed:?}"
        );
    }

    #[test]
    fn raw_mode_absorption_depletes_the_ensemble() {
        // Extra uniform loss beyond the channel feedback absorbs
        // trajectories; the survival fraction must track the decaying
        // trace of the raw-mode propagation.
        let gamma = 1.0_f64;
        let t = 1.0;
        let n_traj = 2000;
        let l = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 {
                c(gamma.sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let a = &(&l.adjoint() * &l).scale_re(0.5) + &ComplexMatrix::identity(2).scale_re(0.3);
        let bundle = GeneratorBundle::from_parts(
            &ComplexMatrix::zeros(2, 2),
            &a,
            vec![Channel {
                weight: 1.0,
                matrix: l,
                bath_level: 0,
                bath_state: 0,
            }],
            GeneratorMode::Raw,
        )
        .unwrap();
        let psi = plus_ket();
        let (trajectories, averaged) = sample_trajectories(&bundle, &psi, t, n_traj, 5).unwrap();
        let survived = trajectories.iter().filter(|tr| tr.survived).count();
        assert!(survived < n_traj, "expected some absorption");
        let fraction = survived as f64 / n_traj as f64;
        assert!((averaged.trace().re - fraction).abs() < 1e-12);
        let exact_trace = propagate(&bundle, &psi.dyad(), t).unwrap().trace().re;
        let stderr = (exact_trace * (1.0 - exact_trace) / n_traj as f64).sqrt();
        assert!(
            (fraction - exact_trace).abs() < 5.0 * stderr,
            "survival {fraction} vs trace {exact_trace} (stderr {stderr})"
        );
    }

    #[test]
    fn trajectory_input_validation() {
        let bundle = damping_bundle(0.5);
        let unnormalized = ComplexMatrix::ket(&[c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(sample_trajectories(&bundle, &unnormalized, 1.0, 4, 0).is_err());
        let psi = plus_ket();
        assert!(sample_trajectories(&bundle, &psi, -1.0, 4, 0).is_err());
        assert!(sample_trajectories(&bundle, &psi, 1.0, 0, 0).is_err());
    }
}
