//! Centralized numerical tolerances and caps.
//!
//! Every threshold the crate tests against is a named constant here, so each
//! invariant is checkable with an explicit number and tests never embed
//! magic values. Grouped by the role the number plays.

/// Hermiticity defect allowed when a matrix is asserted Hermitian
/// (max-norm of `M - M^dag`).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Stricter Hermiticity bound used for model inputs (`h_m`, coupling
/// pairing), where the data is user-supplied and exactly pairable.
pub const MODEL_HERMITIAN_TOL: f64 = 1e-12;

/// Allowed deviation of a statistical operator's trace from its nominal
/// value.
pub const STATE_TRACE_TOL: f64 = 1e-10;

/// Eigenvalue floor for positive-semidefiniteness checks on states:
/// `min eig >= -PSD_EIG_FLOOR` passes.
pub const PSD_EIG_FLOOR: f64 = 1e-10;

/// Relative error allowed between a superoperator matrix applied to a
/// stacked operator and the defining action computed directly.
pub const SUPEROP_ACTION_RTOL: f64 = 1e-12;

/// Relative residual bound for the shifted-Sylvester resolvent solve.
pub const SYLVESTER_RESIDUAL_RTOL: f64 = 1e-9;

/// A resolvent shift closer than this to the shifted spectrum is resonant.
pub const RESONANCE_GUARD: f64 = 1e-12;

/// Max-norm residual bound for the dense resolvent-identity verification.
pub const RESOLVENT_IDENTITY_TOL: f64 = 1e-8;

/// Lowest Choi-matrix eigenvalue compatible with complete positivity.
pub const CHOI_CP_FLOOR: f64 = -1e-8;

/// Allowed trace drift of a propagator over a full operator basis.
pub const TRACE_DRIFT_TOL: f64 = 1e-10;

/// Trace-conservation bound for generators in trace-enforced mode.
pub const TRACE_ENFORCED_TOL: f64 = 1e-12;

/// Channel weights at or below this floor are pruned from the channel list.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Probabilities at or below this floor are treated as zero when
/// conditioning (no conditional state is produced).
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// One-norm above which the matrix exponential refuses to run.
pub const EXPM_NORM_CAP: f64 = 500.0;

/// Largest row or column dimension a tensor product or superoperator matrix
/// may have.
pub const MAX_TENSOR_DIM: usize = 4096;

/// Largest jump count resolved by the count-resolved propagator; beyond it
/// the block dimension grows without statistical payoff.
pub const MAX_COUNT: usize = 12;

/// Reconstruction tolerance for block resummation identities (T-block
/// reassembly, position-resolved sums).
pub const RESUMMATION_TOL: f64 = 1e-9;

/// Micro-state matrix elements below this modulus are ignored when
/// estimating the coherence time scale.
pub const RHO1_SIGNIFICANT: f64 = 0.01;

/// Bath-state off-diagonal elements below this modulus are ignored when
/// testing near-stationarity.
pub const BATH_COHERENCE_FLOOR: f64 = 1e-8;

/// Margin factor by which "much smaller than" is operationalized in the
/// time-scale diagnostics: `a << b` is flagged true when `a * 10 <= b`
/// (equivalently when the measured ratio is at most 0.1).
pub const TIMESCALE_MARGIN: f64 = 10.0;

/// Translation-invariance defect allowed for ring-lattice models.
pub const SHIFT_SYMMETRY_TOL: f64 = 1e-10;

/// Floor below which the measuring-decomposition weight `Tr(2 A rho)`
/// counts as degenerate.
pub const MEASURE_WEIGHT_FLOOR: f64 = 1e-14;

/// Absorption branch probabilities below this are clamped to zero in the
/// trajectory sampler.
pub const ABSORPTION_CLAMP: f64 = 1e-12;

/// Phase-fixing threshold: the first eigenvector component with modulus
/// above this is rotated to the positive real axis.
pub const PHASE_FIX_FLOOR: f64 = 1e-12;
