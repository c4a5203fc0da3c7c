//! Artifact schemas and (de)serialization helpers.
//!
//! Structured artifacts are JSON; matrices are nested arrays of `[re, im]`
//! pairs in row-major order. Tables are CSV with every float printed at 17
//! significant digits, which both round-trips `f64` exactly and makes
//! repeated runs byte-identical. All schemas are documented in
//! `docs/formats.md`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use semigroup_core::algebra::ComplexMatrix;
use semigroup_core::fock::{CouplingTerm, SystemModel};
use semigroup_core::generator::{Channel, GeneratorBundle, GeneratorMode};

use crate::error::LabError;

/// A complex matrix as nested `[re, im]` rows.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

/// A complex vector as `[re, im]` entries.
pub type JsonVector = Vec<[f64; 2]>;

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, context: &str) -> Result<ComplexMatrix, LabError> {
    let n_rows = rows.len();
    if n_rows == 0 {
        return Err(LabError::Input(format!("{context}: matrix has no rows")));
    }
    let n_cols = rows[0].len();
    if n_cols == 0 {
        return Err(LabError::Input(format!("{context}: matrix has no columns")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_cols {
            return Err(LabError::Input(format!(
                "{context}: row {i} has {} entries, expected {n_cols}",
                row.len()
            )));
        }
    }
    Ok(ComplexMatrix::from_fn(n_rows, n_cols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn vector_to_json(v: &ComplexMatrix) -> JsonVector {
    (0..v.rows()).map(|i| [v[(i, 0)].re, v[(i, 0)].im]).collect()
}

pub fn vector_from_json(entries: &JsonVector, context: &str) -> Result<ComplexMatrix, LabError> {
    if entries.is_empty() {
        return Err(LabError::Input(format!("{context}: vector is empty")));
    }
    Ok(ComplexMatrix::from_fn(entries.len(), 1, |i, _| {
        Complex64::new(entries[i][0], entries[i][1])
    }))
}

// ---------------------------------------------------------------------------
// Input schemas
// ---------------------------------------------------------------------------

/// Model description: micro mode energies, bath Hamiltonian, coupling terms.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub micro_energies: Vec<f64>,
    pub h_m: JsonMatrix,
    pub coupling_terms: Vec<CouplingTermFile>,
    /// Inverse temperature of the Gibbs bath state; defaults to 1.0 and is
    /// overridden by `--beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct CouplingTermFile {
    pub f: usize,
    pub g: usize,
    pub b: JsonMatrix,
}

impl ModelFile {
    pub fn to_model(&self) -> Result<SystemModel, LabError> {
        let h_m = matrix_from_json(&self.h_m, "h_m")?;
        let terms = self
            .coupling_terms
            .iter()
            .map(|t| {
                Ok(CouplingTerm {
                    f: t.f,
                    g: t.g,
                    b: matrix_from_json(&t.b, &format!("coupling_terms B_({}, {})", t.f, t.g))?,
                })
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        Ok(SystemModel::new(self.micro_energies.clone(), h_m, terms)?)
    }

    pub fn from_model(model: &SystemModel, beta: Option<f64>) -> Self {
        Self {
            micro_energies: model.micro_energies().to_vec(),
            h_m: matrix_to_json(model.h_m()),
            coupling_terms: model
                .coupling_terms()
                .iter()
                .map(|t| CouplingTermFile {
                    f: t.f,
                    g: t.g,
                    b: matrix_to_json(&t.b),
                })
                .collect(),
            beta,
        }
    }
}

/// A generator bundle: Hamiltonian, raw loss operator, jump channels.
#[derive(Serialize, Deserialize)]
pub struct BundleFile {
    /// `"trace_enforced"` or `"raw"`.
    pub mode: String,
    /// Regularizer the bundle was extracted with (provenance only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Full Hermitian Hamiltonian (base energies plus coherent shift).
    pub h: JsonMatrix,
    /// Raw loss operator; the trace-enforced one is rebuilt from the
    /// channels on load.
    pub a: JsonMatrix,
    pub channels: Vec<ChannelFile>,
}

#[derive(Serialize, Deserialize)]
pub struct ChannelFile {
    pub weight: f64,
    pub bath_level: usize,
    pub bath_state: usize,
    pub l: JsonMatrix,
}

impl BundleFile {
    pub fn to_bundle(&self) -> Result<GeneratorBundle, LabError> {
        let mode: GeneratorMode = self.mode.parse()?;
        let h = matrix_from_json(&self.h, "bundle h")?;
        let a = matrix_from_json(&self.a, "bundle a")?;
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(k, ch)| {
                Ok(Channel {
                    weight: ch.weight,
                    matrix: matrix_from_json(&ch.l, &format!("channel {k} matrix"))?,
                    bath_level: ch.bath_level,
                    bath_state: ch.bath_state,
                })
            })
            .collect::<Result<Vec<_>, LabError>>()?;
        Ok(GeneratorBundle::from_parts(&h, &a, channels, mode)?)
    }

    pub fn from_bundle(bundle: &GeneratorBundle) -> Self {
        Self {
            mode: bundle.mode().to_string(),
            eta: bundle.eta(),
            h: matrix_to_json(bundle.h()),
            a: matrix_to_json(bundle.a_raw()),
            channels: bundle
                .channels()
                .channels()
                .iter()
                .map(|ch| ChannelFile {
                    weight: ch.weight,
                    bath_level: ch.bath_level,
                    bath_state: ch.bath_state,
                    l: matrix_to_json(&ch.matrix),
                })
                .collect(),
        }
    }
}

/// A density matrix.
#[derive(Serialize, Deserialize)]
pub struct StateFile {
    pub rho: JsonMatrix,
}

/// A pure state; normalized on load.
#[derive(Serialize, Deserialize)]
pub struct KetFile {
    pub amplitudes: JsonVector,
}

/// A counting question for the `count` subcommand.
#[derive(Serialize, Deserialize)]
pub struct QueryFile {
    pub t_start: f64,
    pub t_end: f64,
    pub n_events: usize,
    /// Channel indices that increment the counter; omitted or null means
    /// every channel is counted.
    #[serde(default)]
    pub sigma: Option<Vec<usize>>,
    pub n_max: usize,
}

// ---------------------------------------------------------------------------
// Output schemas
// ---------------------------------------------------------------------------

/// Extraction diagnostics.
#[derive(Serialize, Deserialize)]
pub struct DiagnosticsFile {
    pub eta: f64,
    pub mode: String,
    pub channel_count: usize,
    pub pruned_count: usize,
    pub pruned_weight: f64,
    /// Residual of the lowering/raising adjoint relation during extraction.
    pub adjoint_residual: f64,
    /// Trace-conservation defect on the maximally mixed state.
    pub trace_defect_mixed: f64,
    /// Smallest eigenvalue of `A_raw - A_enforced` (non-negative: the raw
    /// semigroup only absorbs).
    pub absorptive_margin: f64,
    /// Plateau of the regularizer scan when one was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau_eta: Option<f64>,
    pub timescales: TimescalesFile,
}

/// Timescale diagnostics; `None` encodes an unbounded (infinite) time.
#[derive(Serialize, Deserialize)]
pub struct TimescalesFile {
    pub band_width: f64,
    pub mean_spacing: f64,
    pub window: Option<f64>,
    pub system_coherence_time: Option<f64>,
    pub bath_coherence_freq: f64,
    pub spacing_margin: Option<f64>,
    pub system_margin: Option<f64>,
    pub bath_margin: Option<f64>,
    pub coarse_grain_ok: bool,
    pub micro_coherence_ok: bool,
    pub bath_stationarity_ok: bool,
    pub warnings: Vec<String>,
}

/// Evolved states on a time grid.
#[derive(Serialize, Deserialize)]
pub struct EvolvedFile {
    pub times: Vec<f64>,
    pub states: Vec<JsonMatrix>,
}

/// Result of one counting query.
#[derive(Serialize, Deserialize)]
pub struct CountFile {
    pub probability: f64,
    pub below_floor: bool,
    pub effect: JsonMatrix,
    /// Normalized conditional state; null when the probability was at or
    /// below the conditioning floor.
    pub conditional_state: Option<JsonMatrix>,
    pub query: QueryFile,
}

/// Trajectory batch summary.
#[derive(Serialize, Deserialize)]
pub struct UnravelSummaryFile {
    pub seed: u64,
    pub t: f64,
    pub n_trajectories: usize,
    pub survived: usize,
    pub total_events: usize,
    pub mean_events: f64,
    /// Fraction of surviving trajectories with more events than the exact
    /// table's truncation (they get no counts.csv row).
    pub overflow_fraction: f64,
}

/// Interference run summary.
#[derive(Serialize, Deserialize)]
pub struct InterfereSummaryFile {
    pub gamma_w: f64,
    pub v2_re: f64,
    pub v2_im: f64,
    pub transit_time: f64,
    pub phi_steps: usize,
    pub visibility: f64,
    pub coherent_visibility: f64,
    pub zero_event_weight: f64,
}

/// One validation check.
#[derive(Serialize, Deserialize)]
pub struct CheckFile {
    pub module: String,
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// The validate subcommand's report.
#[derive(Serialize, Deserialize)]
pub struct ValidationReportFile {
    pub tol_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<String>,
    pub checks: Vec<CheckFile>,
    pub failures: usize,
}

// ---------------------------------------------------------------------------
// Filesystem helpers
// ---------------------------------------------------------------------------

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, &e))?;
    serde_json::from_str(&text).map_err(|e| LabError::json(path, &e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::json(path, &e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| LabError::io(path, &e))
}

/// Write a CSV file from a header line and preformatted rows.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<(), LabError>
where
    I: IntoIterator<Item = String>,
{
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| LabError::io(path, &e))
}

/// Read a CSV written by this build back into its cells (header dropped).
pub fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, &e))?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|line| !line.is_empty())
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect())
}

/// Deterministic float cell: 17 significant digits round-trip `f64`.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// `None` for non-finite values so the JSON stays parseable.
pub fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
