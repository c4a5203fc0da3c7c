//! Phenomenological optics regime: refractive index from an effective
//! complex potential, and a two-path interferometer scenario exhibiting
//! the competition between coherent phase evolution and incoherent
//! which-way events.
//!
//! The interferometer is an abstract two-path system (path 1 = index 0,
//! path 2 = index 1) with transit-time dynamics: a phase plate and a real
//! potential shift the arm-2 energy, the imaginary part of the potential
//! absorbs on arm 2, and which-way coupling adds the symmetric projector
//! pair `L1 = sqrt(gamma_w) |1><1|`, `L2 = sqrt(gamma_w) |2><2|`. The
//! symmetric pair attenuates both arms equally in the no-event branch, so
//! the zero-event subcollection keeps full fringe visibility while its
//! weight decays, and every jump projects onto an arm, so the event
//! background carries no fringes at all.

use num_complex::Complex64;

use crate::algebra::ComplexMatrix;
use crate::error::CoreError;
use crate::generator::{Channel, GeneratorBundle, GeneratorMode};
use crate::tol;
use crate::unravel::no_jump_propagator;
use crate::Result;

/// A medium seen by a monochromatic beam: one complex potential value per
/// site (a single entry describes a uniform medium) and the beam
/// frequency. With `hbar = 1` the incoming energy is `h nu = 2 pi nu`.
#[derive(Debug, Clone)]
pub struct OpticsModel {
    /// Complex potential per site, in energy units.
    pub potential: Vec<Complex64>,
    /// Beam frequency `nu > 0`.
    pub frequency: f64,
    /// Particle mass label; carried for bookkeeping, never entering the
    /// index formula.
    pub mass: f64,
}

impl OpticsModel {
    /// Uniform medium with a single potential value.
    pub fn uniform(potential: Complex64, frequency: f64) -> Self {
        Self {
            potential: vec![potential],
            frequency,
            mass: 1.0,
        }
    }

    /// Medium with one potential value per site.
    pub fn per_site(potential: Vec<Complex64>, frequency: f64) -> Self {
        Self {
            potential,
            frequency,
            mass: 1.0,
        }
    }
}

/// Refractive index per site, with a flag marking sites where the index
/// left the real regime.
#[derive(Debug, Clone)]
pub struct RefractiveIndex {
    /// `n = sqrt(1 - V / (2 pi nu))`, principal branch, one per site.
    pub indices: Vec<Complex64>,
    /// True when any site's `1 - V/h nu` is negative or has an imaginary
    /// part, so the returned index is genuinely complex there.
    pub any_complex: bool,
}

/// Evaluate the refractive index `n = sqrt(1 - V / h nu)` per site.
pub fn refractive_index(model: &OpticsModel) -> Result<RefractiveIndex> {
    if !model.frequency.is_finite() || model.frequency <= 0.0 {
        return Err(CoreError::Domain(format!(
            "beam frequency must be positive and finite, got {}",
            model.frequency
        )));
    }
    if model.potential.is_empty() {
        return Err(CoreError::Domain(
            "optics model needs at least one potential site".to_string(),
        ));
    }
    let h_nu = 2.0 * std::f64::consts::PI * model.frequency;
    let mut any_complex = false;
    let indices = model
        .potential
        .iter()
        .map(|v| {
            let arg = Complex64::new(1.0, 0.0) - v / h_nu;
            if arg.im != 0.0 || arg.re < 0.0 {
                any_complex = true;
            }
            arg.sqrt()
        })
        .collect();
    Ok(RefractiveIndex {
        indices,
        any_complex,
    })
}

/// A two-path interferometer: phase plate, complex arm-2 potential,
/// which-way coupling, and transit time.
#[derive(Debug, Clone)]
pub struct InterferometerScenario {
    /// Phase plate setting on arm 2.
    pub phase: f64,
    /// Complex potential on arm 2; the real part shifts the arm energy,
    /// a positive imaginary part absorbs (negative means gain and is
    /// rejected).
    pub v2: Complex64,
    /// Which-way event rate `gamma_w >= 0`.
    pub gamma_w: f64,
    /// Transit time through the arms, `t_tr > 0`.
    pub transit_time: f64,
}

impl InterferometerScenario {
    /// Check the scenario invariants.
    pub fn validate(&self) -> Result<()> {
        if !self.phase.is_finite() || !self.v2.re.is_finite() || !self.v2.im.is_finite() {
            return Err(CoreError::Domain(
                "interferometer parameters must be finite".to_string(),
            ));
        }
        if !self.gamma_w.is_finite() || self.gamma_w < 0.0 {
            return Err(CoreError::Domain(format!(
                "which-way coupling must be nonnegative, got {}",
                self.gamma_w
            )));
        }
        if !self.transit_time.is_finite() || self.transit_time <= 0.0 {
            return Err(CoreError::Domain(format!(
                "transit time must be positive, got {}",
                self.transit_time
            )));
        }
        if self.v2.im < 0.0 {
            return Err(CoreError::Domain(format!(
                "arm-2 potential with negative imaginary part ({}) would be gain, \
                 which is outside the absorptive regime",
                self.v2.im
            )));
        }
        Ok(())
    }
}

/// The balanced input/analysis ket `(|path 1> + |path 2>)/sqrt(2)`.
pub fn beam_splitter_input() -> ComplexMatrix {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::ket(&[amp, amp])
}

/// Build the two-path generator bundle for one phase setting.
///
/// `H = diag(0, Re V2 + phi/t_tr)` accumulates the fringe phase over one
/// transit, `A = diag(0, Im V2) + (gamma_w/2) I` carries absorption and
/// the which-way loss, and the channels are the symmetric projector pair
/// at unit weight. The bundle is in raw mode: `A - (1/2) sum pi L^dag L =
/// diag(0, Im V2) >= 0`, so the absorptive margin is exactly the arm-2
/// absorption.
pub fn build_interferometer(scenario: &InterferometerScenario) -> Result<GeneratorBundle> {
    scenario.validate()?;
    let arm2_energy = scenario.v2.re + scenario.phase / scenario.transit_time;
    let h = ComplexMatrix::diag_real(&[0.0, arm2_energy]);
    let half = 0.5 * scenario.gamma_w;
    let a = ComplexMatrix::diag_real(&[half, half + scenario.v2.im]);
    let channels = if scenario.gamma_w > 0.0 {
        let root = scenario.gamma_w.sqrt();
        (0..2)
            .map(|arm| Channel {
                weight: 1.0,
                matrix: ComplexMatrix::from_fn(2, 2, |i, j| {
                    if i == arm && j == arm {
                        Complex64::new(root, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }),
                bath_level: arm,
                bath_state: 0,
            })
            .collect()
    } else {
        Vec::new()
    };
    GeneratorBundle::from_parts(&h, &a, channels, GeneratorMode::Raw)
}

/// Fringe visibility `(I_max - I_min)/(I_max + I_min)` of an intensity
/// scan.
pub fn visibility(intensities: &[f64]) -> Result<f64> {
    if intensities.is_empty() {
        return Err(CoreError::Domain(
            "visibility needs at least one intensity sample".to_string(),
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in intensities {
        lo = lo.min(i);
        hi = hi.max(i);
    }
    let denom = hi + lo;
    if denom <= tol::PROBABILITY_FLOOR {
        return Err(CoreError::Domain(format!(
            "visibility undefined: peak intensities sum to {denom:.3e}"
        )));
    }
    Ok((hi - lo) / denom)
}

/// Interference scan over a phase grid, with the per-count split of each
/// intensity into its zero-event (coherent) part and the event
/// background.
#[derive(Debug, Clone)]
pub struct InterferencePattern {
    /// Phase grid.
    pub phases: Vec<f64>,
    /// Output intensity `I(phi) = <u+| rho(t_tr) |u+>`.
    pub total: Vec<f64>,
    /// Zero-event contribution: the same overlap through the no-jump
    /// contraction alone (the zero-count subcollection).
    pub coherent: Vec<f64>,
    /// Event background `total - coherent`: everything that jumped at
    /// least once.
    pub background: Vec<f64>,
    /// Visibility of the total pattern.
    pub visibility: f64,
    /// Visibility of the coherent part alone (scale-invariant, so its
    /// decaying weight does not affect it).
    pub coherent_visibility: f64,
    /// Weight `p0 = Tr(zero-event term)` of the coherent subcollection;
    /// phase-independent because the loss operator does not depend on the
    /// phase plate.
    pub zero_event_weight: f64,
}

/// Scan the interferometer over a phase grid.
///
/// The scenario's own `phase` field is ignored in favor of the grid; each
/// grid point rebuilds the bundle with that phase plate setting and
/// propagates `psi0` over one transit.
pub fn interference_pattern(
    scenario: &InterferometerScenario,
    psi0: &ComplexMatrix,
    phi_grid: &[f64],
) -> Result<InterferencePattern> {
    scenario.validate()?;
    if phi_grid.is_empty() {
        return Err(CoreError::Domain(
            "interference scan needs a nonempty phase grid".to_string(),
        ));
    }
    if psi0.rows() != 2 || psi0.cols() != 1 {
        return Err(CoreError::Dimension {
            context: "interferometer input ket".to_string(),
            got: format!("{}x{}", psi0.rows(), psi0.cols()),
            expected: "2x1".to_string(),
        });
    }
    if (psi0.norm_sqr() - 1.0).abs() > tol::STATE_TRACE_TOL {
        return Err(CoreError::Domain(format!(
            "interferometer input must be normalized, got norm^2 = {:.12}",
            psi0.norm_sqr()
        )));
    }
    let analysis = beam_splitter_input();
    let rho0 = psi0.dyad();
    let t_tr = scenario.transit_time;
    let mut total = Vec::with_capacity(phi_grid.len());
    let mut coherent = Vec::with_capacity(phi_grid.len());
    let mut background = Vec::with_capacity(phi_grid.len());
    let mut zero_event_weight = 0.0;
    for (k, &phi) in phi_grid.iter().enumerate() {
        let mut point = scenario.clone();
        point.phase = phi;
        let bundle = build_interferometer(&point)?;
        let evolved = crate::lindblad::propagate(&bundle, &rho0, t_tr)?;
        let no_jump = no_jump_propagator(&bundle, 0.0, t_tr)?.apply(&rho0)?;
        let i_total = analysis.inner(&(&evolved * &analysis)).re;
        let i_coherent = analysis.inner(&(&no_jump * &analysis)).re;
        total.push(i_total);
        coherent.push(i_coherent);
        background.push(i_total - i_coherent);
        if k == 0 {
            zero_event_weight = no_jump.trace().re;
        }
    }
    let vis_total = visibility(&total)?;
    let vis_coherent = visibility(&coherent)?;
    Ok(InterferencePattern {
        phases: phi_grid.to_vec(),
        total,
        coherent,
        background,
        visibility: vis_total,
        coherent_visibility: vis_coherent,
        zero_event_weight,
    })
}
