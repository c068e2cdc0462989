//! Experiment execution: builds core objects from a validated config, runs
//! the requested computation (parallelizing sweeps), and returns all result
//! files as in-memory artifacts for the single-threaded collector.

use rayon::prelude::*;
use serde_json::json;

use tcrystal_core::analysis::{dominant_frequency, melting_curve, periodogram, periodogram_resampled};
use tcrystal_core::collision::run_trajectory;
use tcrystal_core::lindblad::{build_liouvillian, gksl_spec, lindblad_trajectory, steady_space};
use tcrystal_core::models::{initial_state, parse_preparation};
use tcrystal_core::record::TrajectoryRecord;
use tcrystal_core::symmetry::{
    certify, lmg_symmetry_n3, search_symmetries, xxz_symmetry_a1, xxz_symmetry_a2,
    DynamicalSymmetry,
};
use tcrystal_core::tensor::{eigh, StateVector};

use crate::config::{
    child_seed, AnalysisSection, ExperimentConfig, ExperimentKind, ModelKindConfig,
};
use crate::output::{fmt_f64, Csv, OutputFile};
use crate::CliError;

pub struct ExperimentOutcome {
    pub files: Vec<OutputFile>,
    /// Human-readable result lines for stdout.
    pub summary: Vec<String>,
}

pub fn execute(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome, CliError> {
    match config.experiment {
        ExperimentKind::Spectrum => run_spectrum(config),
        ExperimentKind::CollisionRun => run_collision(config, seed),
        ExperimentKind::LindbladRun => run_lindblad(config, seed),
        ExperimentKind::SymmetryCheck => run_symmetry(config),
        ExperimentKind::FieldSweep => run_field_sweep(config, seed),
        ExperimentKind::TemperatureSweep => run_temperature_sweep(config, seed),
        ExperimentKind::CompareEngines => run_compare_engines(config, seed),
    }
}

fn build_state(config: &ExperimentConfig) -> Result<StateVector, CliError> {
    let prep = parse_preparation(&config.resolved_initial_state())
        .map_err(|e| CliError::Config(format!("initial_state: {e}")))?;
    initial_state(&prep).map_err(CliError::from)
}

/// Spectral-estimation artifacts for one recorded observable: the power
/// table plus a JSON summary carrying both estimators' peak locations.
fn analysis_files(
    record: &TrajectoryRecord,
    analysis: &AnalysisSection,
    prefix: &str,
) -> Result<(Vec<OutputFile>, String), CliError> {
    let observable = analysis.observable.as_deref().unwrap_or("sx2");
    let grid = analysis.grid.resolve()?;
    let lomb = periodogram(record, observable, analysis.transient_fraction, &grid)?;
    let resampled =
        periodogram_resampled(record, observable, analysis.transient_fraction, &grid)?;
    let (f_lomb, p_lomb) = dominant_frequency(&lomb)?;
    let (f_res, _) = dominant_frequency(&resampled)?;

    let mut csv = Csv::new(&["omega", "power"]);
    for (w, p) in lomb.frequencies.iter().zip(lomb.power.iter()) {
        csv.number_row(&[*w, *p]);
    }
    let report = json!({
        "observable": observable,
        "transient_fraction": analysis.transient_fraction,
        "grid": {"lo": analysis.grid.lo, "hi": analysis.grid.hi, "count": analysis.grid.count},
        "dominant_frequency": {"lomb_scargle": f_lomb, "resampled": f_res},
        "peak_power": p_lomb,
    });
    let files = vec![
        OutputFile::new(format!("{prefix}periodogram.csv"), csv.into_string()),
        OutputFile::new(
            format!("{prefix}analysis.json"),
            serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Io(format!("analysis serialization: {e}")))?,
        ),
    ];
    let summary = format!(
        "{observable}: dominant angular frequency {} (cross-check {})",
        fmt_f64(f_lomb),
        fmt_f64(f_res)
    );
    Ok((files, summary))
}

fn trajectory_files(
    record: &TrajectoryRecord,
    stem: &str,
) -> Result<Vec<OutputFile>, CliError> {
    record.validate()?;
    Ok(vec![
        OutputFile::new(format!("{stem}.csv"), record.to_csv()),
        OutputFile::new(format!("{stem}.json"), record.sidecar_json()?),
    ])
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

fn run_spectrum(config: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    let model = config.model.build()?;
    let fields = config
        .spectrum
        .as_ref()
        .ok_or_else(|| CliError::Config("spectrum needs a [spectrum] section".into()))?
        .resolve()?;

    let rows: Result<Vec<(f64, Vec<f64>)>, CliError> = fields
        .par_iter()
        .map(|&b| {
            let h = model.with_field(b).hamiltonian()?;
            let (values, _) = eigh(&h)?;
            Ok((b, values))
        })
        .collect();
    let rows = rows?;

    let dim = model.dim();
    let labels: Vec<String> = (0..dim).map(|k| format!("e_{k}")).collect();
    let mut header = vec!["B"];
    header.extend(labels.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for (b, values) in &rows {
        let mut row = Vec::with_capacity(dim + 1);
        row.push(*b);
        row.extend_from_slice(values);
        csv.number_row(&row);
    }
    Ok(ExperimentOutcome {
        files: vec![OutputFile::new("spectrum.csv", csv.into_string())],
        summary: vec![format!(
            "diagonalized {} levels at {} field values",
            dim,
            rows.len()
        )],
    })
}

// ---------------------------------------------------------------------------
// single trajectories
// ---------------------------------------------------------------------------

fn run_collision(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome, CliError> {
    let model = config.model.build()?;
    let bath = config.bath.as_ref().expect("validated").build();
    let run = config.run.as_ref().expect("validated");
    let n_collisions = run.n_collisions.expect("validated");
    let psi0 = build_state(config)?;
    let observables = config.build_observables()?;

    let record = run_trajectory(
        &model,
        &psi0,
        &bath,
        n_collisions,
        &observables,
        seed,
        run.record_substeps,
    )?;
    let mut files = trajectory_files(&record, "trajectory")?;
    let mut summary = vec![format!(
        "{n_collisions} collisions recorded to t = {}",
        fmt_f64(record.final_time())
    )];
    if let Some(analysis) = &config.analysis {
        let (extra, line) = analysis_files(&record, analysis, "")?;
        files.extend(extra);
        summary.push(line);
    }
    Ok(ExperimentOutcome { files, summary })
}

fn run_lindblad(config: &ExperimentConfig, _seed: u64) -> Result<ExperimentOutcome, CliError> {
    let model = config.model.build()?;
    let damping = config.damping.as_ref().expect("validated").build();
    let run = config.run.as_ref().expect("validated");
    let (t_final, dt) = (run.t_final.expect("validated"), run.dt.expect("validated"));
    let psi0 = build_state(config)?;
    let observables = config.build_observables()?;

    let record = lindblad_trajectory(&model, &psi0, &damping, t_final, dt, &observables)?;
    let mut files = trajectory_files(&record, "trajectory")?;
    let mut summary = vec![format!(
        "master-equation run to t = {} in steps of {}",
        fmt_f64(t_final),
        fmt_f64(dt)
    )];
    if let Some(analysis) = &config.analysis {
        let (extra, line) = analysis_files(&record, analysis, "")?;
        files.extend(extra);
        summary.push(line);
    }
    Ok(ExperimentOutcome { files, summary })
}

// ---------------------------------------------------------------------------
// symmetry certification / search
// ---------------------------------------------------------------------------

fn named_operator(name: &str) -> Option<DynamicalSymmetry> {
    match name {
        "collective_n3" => Some(lmg_symmetry_n3()),
        "exchange_a1" => Some(xxz_symmetry_a1()),
        "exchange_a2" => Some(xxz_symmetry_a2()),
        _ => None,
    }
}

fn run_symmetry(config: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    let model = config.model.build()?;
    let damping = config.damping.as_ref().expect("validated").build();
    let section = config.symmetry.as_ref().expect("validated");

    let h = model.hamiltonian()?;
    let spec = gksl_spec(&model, damping.rate, damping.n_bar)?;
    let steady = steady_space(&build_liouvillian(&spec)?)?;
    let rho_inf = steady.canonical.matrix();

    let rho0_density = match &config.initial_state {
        Some(_) => Some(build_state(config)?.to_density()),
        None => None,
    };
    let rho0 = rho0_density.as_ref().map(|d| d.matrix());

    let (document, summary) = if section.operator == "search" {
        let candidates = search_symmetries(&h, spec.jumps.as_slice(), rho_inf, 1e-8)?;
        let mut entries = Vec::with_capacity(candidates.len());
        for cand in &candidates {
            let report = certify(&h, spec.jumps.as_slice(), &cand.symmetry, rho_inf, rho0, section.tol)?;
            entries.push(json!({
                "lambda": cand.lambda,
                "report": report.to_json(),
            }));
        }
        let doc = json!({
            "operator": "search",
            "steady_dimension": steady.dimension(),
            "candidates": entries,
        });
        let oscillating = candidates.iter().filter(|c| c.lambda.abs() > 1e-9).count();
        let line = format!(
            "search found {} candidate operator(s) ({} oscillating) on a steady space of dimension {}",
            candidates.len(),
            oscillating,
            steady.dimension()
        );
        (doc, line)
    } else {
        let operator = named_operator(&section.operator)
            .ok_or_else(|| CliError::Config(format!("unknown operator {:?}", section.operator)))?;
        let report = certify(&h, spec.jumps.as_slice(), &operator, rho_inf, rho0, section.tol)?;
        let line = format!(
            "{}: condition (i) {} (λ_est = {}), overall {}",
            report.label,
            if report.verdict_i { "pass" } else { "fail" },
            fmt_f64(report.lambda_est),
            if report.supported { "SUPPORTED" } else { "NOT SUPPORTED" }
        );
        let doc = json!({
            "operator": section.operator,
            "steady_dimension": steady.dimension(),
            "report": report.to_json(),
        });
        (doc, line)
    };

    Ok(ExperimentOutcome {
        files: vec![OutputFile::new(
            "symmetry.json",
            serde_json::to_string_pretty(&document)
                .map_err(|e| CliError::Io(format!("report serialization: {e}")))?,
        )],
        summary: vec![summary],
    })
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

fn predicted_frequency(kind: ModelKindConfig, n: usize, field: f64) -> f64 {
    match kind {
        // Collective model: band gap 2/N + 2B.
        ModelKindConfig::Lmg => 2.0 / n as f64 + 2.0 * field,
        // Exchange ring: protected line at 2B.
        ModelKindConfig::Xxz => 2.0 * field,
    }
}

fn run_field_sweep(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome, CliError> {
    let base_model = config.model.build()?;
    let bath = config.bath.as_ref().expect("validated").build();
    let run = config.run.as_ref().expect("validated");
    let n_collisions = run.n_collisions.expect("validated");
    let psi0 = build_state(config)?;
    let observables = config.build_observables()?;
    let analysis = config.analysis.clone().unwrap_or_default();
    let fields = config
        .sweep
        .as_ref()
        .and_then(|s| s.field_values.clone())
        .expect("validated");

    let rows: Result<Vec<(f64, f64, f64)>, CliError> = fields
        .par_iter()
        .map(|&b| {
            let model = base_model.with_field(b);
            let run_seed = child_seed(seed, &format!("field={}", fmt_f64(b)));
            let record = run_trajectory(
                &model,
                &psi0,
                &bath,
                n_collisions,
                &observables,
                run_seed,
                run.record_substeps,
            )?;
            let observable = analysis.observable.as_deref().unwrap_or("sx2");
            let grid = analysis.grid.resolve()?;
            let p = periodogram(&record, observable, analysis.transient_fraction, &grid)?;
            let (f, _) = dominant_frequency(&p)?;
            Ok((b, f, predicted_frequency(config.model.kind, config.model.n_qubits, b)))
        })
        .collect();
    let rows = rows?;

    let mut csv = Csv::new(&["B", "freq_measured", "freq_predicted"]);
    let mut worst: f64 = 0.0;
    for &(b, f, pred) in &rows {
        csv.number_row(&[b, f, pred]);
        worst = worst.max((f - pred).abs() / pred);
    }
    Ok(ExperimentOutcome {
        files: vec![OutputFile::new("field_sweep.csv", csv.into_string())],
        summary: vec![format!(
            "{} field points; worst relative deviation from the predicted line {:.3}%",
            rows.len(),
            100.0 * worst
        )],
    })
}

fn run_temperature_sweep(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentOutcome, CliError> {
    let sweep = config.sweep.as_ref().expect("validated");
    let probes = sweep.probe_times.clone().expect("validated");
    let window = sweep.window.expect("validated");
    let melt_obs = sweep.melt_observable.as_deref().unwrap_or("sx2").to_string();
    let model = config.model.build()?;
    let psi0 = build_state(config)?;
    let observables = config.build_observables()?;

    // (parameter label, parameter value, record) for each sweep point, plus
    // the infinite-β / zero-occupation reference the ratios are taken
    // against. The same master seed is reused across temperatures so every
    // run sees the identical waiting-time sequence: amplitude ratios then
    // reflect temperature alone, not waiting-time noise.
    let (param_name, reference, points): (&str, TrajectoryRecord, Vec<(f64, TrajectoryRecord)>) =
        if let Some(betas) = &sweep.betas {
            let base = config.bath.as_ref().expect("validated").build();
            let run = config.run.as_ref().expect("validated");
            let n_collisions = run.n_collisions.expect("validated");
            let at_beta = |beta: f64| -> Result<TrajectoryRecord, CliError> {
                let mut bath = base.clone();
                bath.beta = beta;
                run_trajectory(
                    &model,
                    &psi0,
                    &bath,
                    n_collisions,
                    &observables,
                    seed,
                    run.record_substeps,
                )
                .map_err(CliError::from)
            };
            let reference = at_beta(f64::INFINITY)?;
            let points: Result<Vec<(f64, TrajectoryRecord)>, CliError> = betas
                .par_iter()
                .map(|&beta| {
                    let mut bath = base.clone();
                    bath.beta = beta;
                    let record = run_trajectory(
                        &model,
                        &psi0,
                        &bath,
                        n_collisions,
                        &observables,
                        seed,
                        run.record_substeps,
                    )?;
                    Ok((beta, record))
                })
                .collect();
            ("beta", reference, points?)
        } else {
            let n_bars = sweep.n_bars.as_ref().expect("validated");
            let damping = config.damping.as_ref().expect("validated").build();
            let run = config.run.as_ref().expect("validated");
            let (t_final, dt) = (run.t_final.expect("validated"), run.dt.expect("validated"));
            let at_n_bar = |n_bar: f64| -> Result<TrajectoryRecord, CliError> {
                let mut d = damping;
                d.n_bar = n_bar;
                lindblad_trajectory(&model, &psi0, &d, t_final, dt, &observables)
                    .map_err(CliError::from)
            };
            let reference = at_n_bar(0.0)?;
            let points: Result<Vec<(f64, TrajectoryRecord)>, CliError> =
                n_bars.par_iter().map(|&n_bar| Ok((n_bar, at_n_bar(n_bar)?))).collect();
            ("n_bar", reference, points?)
        };

    let mut csv = Csv::new(&[param_name, "t", "ratio"]);
    for (value, record) in &points {
        let curve = melting_curve(&[record], &reference, &melt_obs, &probes, window)?;
        for point in curve {
            csv.number_row(&[*value, point.t, point.ratio]);
        }
    }
    let mut files = vec![OutputFile::new("melting.csv", csv.into_string())];

    if let Some(analysis) = &config.analysis {
        let observable = analysis.observable.as_deref().unwrap_or("sx2");
        let grid = analysis.grid.resolve()?;
        let mut freq_csv = Csv::new(&[param_name, "freq_dominant"]);
        for (value, record) in &points {
            let p = periodogram(record, observable, analysis.transient_fraction, &grid)?;
            let (f, _) = dominant_frequency(&p)?;
            freq_csv.number_row(&[*value, f]);
        }
        files.push(OutputFile::new("frequencies.csv", freq_csv.into_string()));
    }

    if sweep.write_trajectories {
        files.extend(trajectory_files(&reference, &format!("trajectory_{param_name}=ref"))?);
        for (value, record) in &points {
            files.extend(trajectory_files(
                record,
                &format!("trajectory_{param_name}={}", fmt_f64(*value)),
            )?);
        }
    }

    Ok(ExperimentOutcome {
        files,
        summary: vec![format!(
            "melting ratios for {} {param_name} value(s) at {} probe time(s)",
            points.len(),
            probes.len()
        )],
    })
}

// ---------------------------------------------------------------------------
// engine comparison
// ---------------------------------------------------------------------------

fn run_compare_engines(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentOutcome, CliError> {
    let model = config.model.build()?;
    let bath = config.bath.as_ref().expect("validated").build();
    let damping = config.damping.as_ref().expect("validated").build();
    let run = config.run.as_ref().expect("validated");
    let n_collisions = run.n_collisions.expect("validated");
    let (t_final, dt) = (run.t_final.expect("validated"), run.dt.expect("validated"));
    let psi0 = build_state(config)?;

    // The cooling diagnostic needs the contact ground population; make sure
    // it is recorded even under a custom observable list.
    let mut observables = config.build_observables()?;
    if !observables.iter().any(|(name, _)| name == "p0_q1") {
        observables.push(
            tcrystal_core::models::ground_population_q1(config.model.n_qubits)
                .map_err(CliError::from)?,
        );
    }

    let collision = run_trajectory(
        &model,
        &psi0,
        &bath,
        n_collisions,
        &observables,
        seed,
        run.record_substeps,
    )?;
    let master = lindblad_trajectory(&model, &psi0, &damping, t_final, dt, &observables)?;

    let analysis = config.analysis.clone().unwrap_or_default();
    let observable = analysis.observable.as_deref().unwrap_or("sx2").to_string();
    let grid = analysis.grid.resolve()?;
    let grid_step = grid[1] - grid[0];

    let mut csv = Csv::new(&["engine", "dominant_frequency", "late_min_p0_q1"]);
    let mut freqs = Vec::new();
    for (label, record) in [("collision", &collision), ("lindblad", &master)] {
        let p = periodogram(record, &observable, analysis.transient_fraction, &grid)?;
        let (f, _) = dominant_frequency(&p)?;
        let p0 = record
            .series("p0_q1")
            .ok_or_else(|| CliError::Runtime("contact population series missing".into()))?;
        let cutoff = 0.9 * record.final_time();
        let late_min = record
            .times
            .iter()
            .zip(p0.iter())
            .filter(|(t, _)| **t >= cutoff)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        csv.row(&[label.to_string(), fmt_f64(f), fmt_f64(late_min)]);
        freqs.push(f);
    }

    let mut files = vec![OutputFile::new("compare.csv", csv.into_string())];
    files.extend(trajectory_files(&collision, "trajectory_collision")?);
    files.extend(trajectory_files(&master, "trajectory_lindblad")?);

    let gap = (freqs[0] - freqs[1]).abs();
    Ok(ExperimentOutcome {
        files,
        summary: vec![format!(
            "dominant-frequency gap between engines: {} ({} grid steps of {})",
            fmt_f64(gap),
            fmt_f64(gap / grid_step),
            fmt_f64(grid_step)
        )],
    })
}
