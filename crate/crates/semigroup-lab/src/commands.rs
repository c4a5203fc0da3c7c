//! Subcommand implementations. Each one reads its inputs, delegates the
//! numerics to the core crate, and writes the documented artifacts into
//! the output directory.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use semigroup_core::algebra::ComplexMatrix;
use semigroup_core::demo::demo_model;
use semigroup_core::fock::{build_sectors, BathState, MicroState, SystemModel};
use semigroup_core::generator::{
    default_eta, eta_scan, geometric_grid, timescale_report, GeneratorBundle, GeneratorMode,
};
use semigroup_core::lindblad::{propagate, propagate_rk4};
use semigroup_core::optics::{beam_splitter_input, interference_pattern, InterferometerScenario};
use semigroup_core::unravel::{counting_probability, dyson_terms, sample_trajectories, CountingQuery};

use crate::cli::{
    CountArgs, EvolveArgs, ExtractArgs, InterfereArgs, UnravelArgs, ValidateArgs,
};
use crate::error::LabError;
use crate::io::{
    self, fmt_f, BundleFile, CheckFile, CountFile, DiagnosticsFile, EvolvedFile,
    InterfereSummaryFile, KetFile, ModelFile, QueryFile, StateFile, TimescalesFile,
    UnravelSummaryFile, ValidationReportFile,
};

fn ensure_out_dir(dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, &e))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn load_bundle(path: &Path) -> Result<GeneratorBundle, LabError> {
    io::read_json::<BundleFile>(path)?.to_bundle()
}

fn load_state(path: &Path) -> Result<MicroState, LabError> {
    let file: StateFile = io::read_json(path)?;
    let rho = io::matrix_from_json(&file.rho, "state rho")?;
    Ok(MicroState::new(rho)?)
}

fn load_ket(path: &Path) -> Result<ComplexMatrix, LabError> {
    let file: KetFile = io::read_json(path)?;
    let ket = io::vector_from_json(&file.amplitudes, "ket amplitudes")?;
    Ok(ket.normalized()?)
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

pub fn cmd_extract(args: &ExtractArgs) -> Result<(), LabError> {
    ensure_out_dir(&args.out_dir)?;

    let (model, file_beta): (SystemModel, Option<f64>) = if args.demo {
        (demo_model(4, 0.05, 0.02), None)
    } else {
        let path = args.model.as_ref().ok_or_else(|| {
            LabError::Input("extract needs --model <file> or --demo".to_string())
        })?;
        let file: ModelFile = io::read_json(path)?;
        let model = file.to_model()?;
        (model, file.beta)
    };
    let beta = args.beta.or(file_beta).unwrap_or(1.0);
    let mode: GeneratorMode = args.mode.parse()?;

    let sec = build_sectors(&model)?;
    let bath = BathState::gibbs(model.h_m(), beta)?;

    let scan = if args.eta_scan {
        let grid = geometric_grid(args.eta_lo, args.eta_hi, args.eta_points)?;
        Some(eta_scan(&sec, &bath, &grid)?)
    } else {
        None
    };
    let eta = args
        .eta
        .or_else(|| scan.as_ref().map(|s| s.plateau_eta()))
        .unwrap_or_else(|| default_eta(&sec));

    let bundle = GeneratorBundle::build(&sec, &bath, eta, mode)?;

    let bundle_path = args.out_dir.join("bundle.json");
    io::write_json(&bundle_path, &BundleFile::from_bundle(&bundle))?;
    announce(&bundle_path);

    let mixed = MicroState::maximally_mixed(model.d_s());
    let times = timescale_report(&sec, &bath, mixed.rho1(), eta);
    let diagnostics = DiagnosticsFile {
        eta,
        mode: mode.to_string(),
        channel_count: bundle.channels().len(),
        pruned_count: bundle.channels().pruned_count(),
        pruned_weight: bundle.channels().pruned_weight(),
        adjoint_residual: bundle.adjoint_residual(),
        trace_defect_mixed: bundle.trace_defect(mixed.rho1()),
        absorptive_margin: bundle.absorptive_margin()?,
        plateau_eta: scan.as_ref().map(|s| s.plateau_eta()),
        timescales: TimescalesFile {
            band_width: times.band_width,
            mean_spacing: times.mean_spacing,
            window: io::finite_or_none(times.window),
            system_coherence_time: io::finite_or_none(times.system_coherence_time),
            bath_coherence_freq: times.bath_coherence_freq,
            spacing_margin: io::finite_or_none(times.spacing_margin),
            system_margin: io::finite_or_none(times.system_margin),
            bath_margin: io::finite_or_none(times.bath_margin),
            coarse_grain_ok: times.coarse_grain_ok,
            micro_coherence_ok: times.micro_coherence_ok,
            bath_stationarity_ok: times.bath_stationarity_ok,
            warnings: times.warnings.clone(),
        },
    };
    let diag_path = args.out_dir.join("diagnostics.json");
    io::write_json(&diag_path, &diagnostics)?;
    announce(&diag_path);

    if let Some(scan) = &scan {
        let scan_path = args.out_dir.join("eta_scan.csv");
        io::write_csv(
            &scan_path,
            "eta,q_norm,channel_mass",
            scan.rows.iter().map(|row| {
                format!("{},{},{}", fmt_f(row.eta), fmt_f(row.q_norm), fmt_f(row.channel_mass))
            }),
        )?;
        announce(&scan_path);
    }

    println!(
        "extracted {} channel(s) at eta = {:.6e} ({})",
        bundle.channels().len(),
        eta,
        mode
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

fn parse_t_grid(text: &str) -> Result<Vec<f64>, LabError> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let trimmed = piece.trim();
        if trimmed.is_empty() {
            continue;
        }
        let t: f64 = trimmed
            .parse()
            .map_err(|_| LabError::Input(format!("bad time value {trimmed:?} in --t-grid")))?;
        out.push(t);
    }
    if out.is_empty() {
        return Err(LabError::Input("--t-grid has no time values".to_string()));
    }
    Ok(out)
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<(), LabError> {
    ensure_out_dir(&args.out_dir)?;
    let bundle = load_bundle(&args.bundle)?;
    let state = load_state(&args.state)?;
    let grid = parse_t_grid(&args.t_grid)?;

    let mut states = Vec::with_capacity(grid.len());
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let rho_t = match args.method.as_str() {
            "exp" => propagate(&bundle, state.rho1(), t)?,
            "rk4" => propagate_rk4(&bundle, state.rho1(), t, args.steps)?,
            other => {
                return Err(LabError::Input(format!(
                    "unknown --method {other:?}; expected \"exp\" or \"rk4\""
                )))
            }
        };
        let trace = rho_t.trace();
        let purity = (&rho_t * &rho_t).trace().re;
        rows.push(format!(
            "{},{},{},{},{}",
            fmt_f(t),
            fmt_f(trace.re),
            fmt_f(trace.im),
            fmt_f(purity),
            fmt_f(rho_t.hermiticity_defect())
        ));
        states.push(io::matrix_to_json(&rho_t));
    }

    let evolved_path = args.out_dir.join("evolved.json");
    io::write_json(
        &evolved_path,
        &EvolvedFile {
            times: grid.clone(),
            states,
        },
    )?;
    announce(&evolved_path);

    let csv_path = args.out_dir.join("evolve.csv");
    io::write_csv(&csv_path, "t,trace_re,trace_im,purity,herm_defect", rows)?;
    announce(&csv_path);

    println!("evolved {} time point(s)", grid.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// unravel
// ---------------------------------------------------------------------------

pub fn cmd_unravel(args: &UnravelArgs) -> Result<(), LabError> {
    ensure_out_dir(&args.out_dir)?;
    let bundle = load_bundle(&args.bundle)?;
    let psi0 = load_ket(&args.ket)?;

    let (trajectories, averaged) =
        sample_trajectories(&bundle, &psi0, args.t, args.trajectories, args.seed)?;

    let traj_path = args.out_dir.join("trajectories.csv");
    io::write_csv(
        &traj_path,
        "trajectory,event,time,channel,bath_level,bath_state",
        trajectories.iter().flat_map(|traj| {
            traj.events.iter().enumerate().map(move |(e, ev)| {
                format!(
                    "{},{},{},{},{},{}",
                    traj.stream,
                    e,
                    fmt_f(ev.time),
                    ev.channel,
                    ev.bath_level,
                    ev.bath_state
                )
            })
        }),
    )?;
    announce(&traj_path);

    // Exact per-count weights for the same window, all channels counted.
    let rho0 = psi0.dyad();
    let terms = dyson_terms(&bundle, &rho0, args.t, args.n_max)?;
    let n_traj = trajectories.len();
    let mut mc_counts = vec![0usize; args.n_max + 1];
    let mut overflow = 0usize;
    let mut total_events = 0usize;
    let mut survived = 0usize;
    for traj in &trajectories {
        total_events += traj.events.len();
        if traj.survived {
            survived += 1;
            if traj.events.len() <= args.n_max {
                mc_counts[traj.events.len()] += 1;
            } else {
                overflow += 1;
            }
        }
    }

    let counts_path = args.out_dir.join("counts.csv");
    io::write_csv(
        &counts_path,
        "n,p_exact,p_mc,stderr",
        terms.iter().enumerate().map(|(n, term)| {
            let p_exact = term.trace().re;
            let p_mc = mc_counts[n] as f64 / n_traj as f64;
            let stderr = (p_exact * (1.0 - p_exact) / n_traj as f64).max(0.0).sqrt();
            format!("{},{},{},{}", n, fmt_f(p_exact), fmt_f(p_mc), fmt_f(stderr))
        }),
    )?;
    announce(&counts_path);

    let averaged_path = args.out_dir.join("averaged_state.json");
    io::write_json(
        &averaged_path,
        &StateFile {
            rho: io::matrix_to_json(&averaged),
        },
    )?;
    announce(&averaged_path);

    let summary = UnravelSummaryFile {
        seed: args.seed,
        t: args.t,
        n_trajectories: n_traj,
        survived,
        total_events,
        mean_events: total_events as f64 / n_traj as f64,
        overflow_fraction: overflow as f64 / n_traj as f64,
    };
    let summary_path = args.out_dir.join("summary.json");
    io::write_json(&summary_path, &summary)?;
    announce(&summary_path);

    println!(
        "sampled {} trajectory(ies): {} survived, {} jump event(s)",
        n_traj, survived, total_events
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// count
// ---------------------------------------------------------------------------

pub fn cmd_count(args: &CountArgs) -> Result<(), LabError> {
    ensure_out_dir(&args.out_dir)?;
    let bundle = load_bundle(&args.bundle)?;
    let state = load_state(&args.state)?;
    let file: QueryFile = io::read_json(&args.query)?;

    let sigma = match &file.sigma {
        Some(list) => list.clone(),
        None => (0..bundle.channels().len()).collect(),
    };
    let query = CountingQuery {
        interval: (file.t_start, file.t_end),
        n_events: file.n_events,
        sigma: sigma.clone(),
        n_max: file.n_max,
    };
    let report = counting_probability(&bundle, state.rho1(), &query)?;

    let out = CountFile {
        probability: report.probability,
        below_floor: report.below_floor,
        effect: io::matrix_to_json(&report.effect),
        conditional_state: report
            .conditional_state
            .as_ref()
            .map(|s| io::matrix_to_json(s.rho1())),
        query: QueryFile {
            t_start: file.t_start,
            t_end: file.t_end,
            n_events: file.n_events,
            sigma: Some(sigma),
            n_max: file.n_max,
        },
    };
    let count_path = args.out_dir.join("count.json");
    io::write_json(&count_path, &out)?;
    announce(&count_path);

    println!(
        "P(N = {} in [{}, {}]) = {:.12e}",
        file.n_events, file.t_start, file.t_end, report.probability
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// interfere
// ---------------------------------------------------------------------------

pub fn cmd_interfere(args: &InterfereArgs) -> Result<(), LabError> {
    ensure_out_dir(&args.out_dir)?;
    if args.phi_steps < 2 {
        return Err(LabError::Input(format!(
            "--phi-steps must be at least 2, got {}",
            args.phi_steps
        )));
    }
    let scenario = InterferometerScenario {
        phase: 0.0,
        v2: Complex64::new(args.v2_re, args.v2_im),
        gamma_w: args.gamma_w,
        transit_time: args.t,
    };
    scenario.validate()?;

    // Extremes-aligned grid: the fringe is shifted by Re(v2) * t, and an
    // even uniform grid anchored there samples the exact max and min, so
    // the reported visibility is the true contrast.
    let theta = args.v2_re * args.t;
    let grid: Vec<f64> = (0..args.phi_steps)
        .map(|k| -theta + 2.0 * std::f64::consts::PI * k as f64 / args.phi_steps as f64)
        .collect();

    let pattern = interference_pattern(&scenario, &beam_splitter_input(), &grid)?;

    let pattern_path = args.out_dir.join("pattern.csv");
    io::write_csv(
        &pattern_path,
        "phi,total,coherent,background",
        (0..pattern.phases.len()).map(|k| {
            format!(
                "{},{},{},{}",
                fmt_f(pattern.phases[k]),
                fmt_f(pattern.total[k]),
                fmt_f(pattern.coherent[k]),
                fmt_f(pattern.background[k])
            )
        }),
    )?;
    announce(&pattern_path);

    let summary = InterfereSummaryFile {
        gamma_w: args.gamma_w,
        v2_re: args.v2_re,
        v2_im: args.v2_im,
        transit_time: args.t,
        phi_steps: args.phi_steps,
        visibility: pattern.visibility,
        coherent_visibility: pattern.coherent_visibility,
        zero_event_weight: pattern.zero_event_weight,
    };
    let summary_path = args.out_dir.join("summary.json");
    io::write_json(&summary_path, &summary)?;
    announce(&summary_path);

    println!(
        "visibility {:.9} (coherent part {:.9}, weight {:.9})",
        pattern.visibility, pattern.coherent_visibility, pattern.zero_event_weight
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), LabError> {
    ensure_out_dir(&args.out_dir)?;
    if !(args.tol_scale.is_finite() && args.tol_scale > 0.0) {
        return Err(LabError::Input(format!(
            "--tol-scale must be a positive number, got {}",
            args.tol_scale
        )));
    }

    let checks = crate::checks::run_checks(args.filter.as_deref())?;
    if checks.is_empty() {
        return Err(LabError::Input(format!(
            "--filter {:?} matches no module",
            args.filter.as_deref().unwrap_or("")
        )));
    }

    let mut rows = Vec::with_capacity(checks.len());
    let mut failures = 0usize;
    for check in &checks {
        let bound = check.bound * args.tol_scale;
        let pass = check.measured <= bound;
        if !pass {
            failures += 1;
        }
        println!(
            "{} {}/{} measured {:.3e} bound {:.3e}",
            if pass { "PASS" } else { "FAIL" },
            check.module,
            check.name,
            check.measured,
            bound
        );
        rows.push(CheckFile {
            module: check.module.to_string(),
            name: check.name.to_string(),
            measured: check.measured,
            bound,
            pass,
        });
    }

    let report = ValidationReportFile {
        tol_scale: args.tol_scale,
        filter: args.filter.clone(),
        checks: rows,
        failures,
    };
    let report_path = args.out_dir.join("report.json");
    io::write_json(&report_path, &report)?;
    announce(&report_path);

    println!(
        "{} of {} check(s) passed",
        checks.len() - failures,
        checks.len()
    );
    if failures > 0 {
        return Err(LabError::Validation { failures });
    }
    Ok(())
}
