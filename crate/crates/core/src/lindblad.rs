//! Deterministic master-equation engine.
//!
//! The continuous counterpart of the collision dynamics: a Markovian
//! generator with coherent part −i[H, ρ] and thermal damping acting on the
//! contact qubit only. The module builds the vectorized generator
//! (Liouvillian), extracts steady states and the spectral gap, and
//! propagates states either by exact exponentiation (small systems) or
//! fixed-step RK4 integration, recording the same trajectory format as the
//! collision engine.

use std::collections::HashMap;

use ndarray::linalg::kron;

use crate::collision::MAX_SUPEROP_DIM;
use crate::error::{Error, Result};
use crate::models::{embed, pauli, Pauli, SpinModel};
use crate::record::{DampingConfig, Engine, RunConfig, TrajectoryRecord};
use crate::tensor::{
    dagger, eig, expm_general, frobenius_norm, hermiticity_defect, identity, spectral_norm, trace,
    unvectorize, vectorize, C64, CMat, CVec, DensityMatrix, StateVector,
};

/// A jump operator with its rate and a short role label (`"minus"` for the
/// damping jump, `"plus"` for the heating jump) used when certification
/// reports are keyed per jump.
#[derive(Debug, Clone)]
pub struct LabeledJump {
    pub label: String,
    pub rate: f64,
    pub op: CMat,
}

/// A full master-equation specification: Hamiltonian plus rated jumps.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub hamiltonian: CMat,
    pub jumps: Vec<LabeledJump>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: CMat, jumps: Vec<LabeledJump>) -> Result<Self> {
        let spec = Self { hamiltonian, jumps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.hamiltonian.nrows();
        if self.hamiltonian.ncols() != d || d == 0 {
            return Err(Error::Dimension(format!(
                "Hamiltonian must be square and nonempty, got {:?}",
                self.hamiltonian.dim()
            )));
        }
        let defect = hermiticity_defect(&self.hamiltonian);
        let tol = 1e-10 * (1.0 + frobenius_norm(&self.hamiltonian));
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        for jump in &self.jumps {
            if jump.op.dim() != (d, d) {
                return Err(Error::Dimension(format!(
                    "jump {:?} is {:?}, expected {d}×{d}",
                    jump.label,
                    jump.op.dim()
                )));
            }
            if !jump.rate.is_finite() || jump.rate < 0.0 {
                return Err(Error::InvalidValue(format!(
                    "jump {:?} has invalid rate {}",
                    jump.label, jump.rate
                )));
            }
        }
        Ok(())
    }
}

/// The jump operator that damps the contact qubit: it transfers the site-1
/// level |1⟩ to |0⟩ and is embedded as the identity on every other site.
pub fn contact_damping_op(n_qubits: usize) -> Result<CMat> {
    embed(&pauli(Pauli::Plus), 1, n_qubits)
}

/// The reverse (heating) jump on the contact qubit: |0⟩ → |1⟩ on site 1.
pub fn contact_heating_op(n_qubits: usize) -> Result<CMat> {
    embed(&pauli(Pauli::Minus), 1, n_qubits)
}

/// Thermal jump pair on the contact qubit: damping at rate Γ(n̄+1) labeled
/// `"minus"`, heating at rate Γn̄ labeled `"plus"`. The heating jump is
/// omitted entirely at n̄ = 0 rather than included with zero rate.
pub fn gksl_jumps(n_qubits: usize, rate: f64, n_bar: f64) -> Result<Vec<LabeledJump>> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::InvalidValue(format!("damping rate must be positive, got {rate}")));
    }
    if !n_bar.is_finite() || n_bar < 0.0 {
        return Err(Error::InvalidValue(format!(
            "thermal occupation must be ≥ 0, got {n_bar}"
        )));
    }
    let mut jumps = vec![LabeledJump {
        label: "minus".into(),
        rate: rate * (n_bar + 1.0),
        op: contact_damping_op(n_qubits)?,
    }];
    if n_bar > 0.0 {
        jumps.push(LabeledJump {
            label: "plus".into(),
            rate: rate * n_bar,
            op: contact_heating_op(n_qubits)?,
        });
    }
    Ok(jumps)
}

/// Master-equation specification for a spin model with thermal damping on
/// the contact qubit.
pub fn gksl_spec(model: &SpinModel, rate: f64, n_bar: f64) -> Result<LindbladSpec> {
    LindbladSpec::new(model.hamiltonian()?, gksl_jumps(model.n_qubits, rate, n_bar)?)
}

/// Vectorized generator acting on row-major-vectorized states.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub dim: usize,
    pub matrix: CMat,
}

/// Build the dense Liouvillian
/// `L = −i(H⊗I − I⊗Hᵀ) + Σ_k r_k [L_k⊗L̄_k − ½(L_k†L_k⊗I + I⊗L_kᵀL̄_k)]`,
/// satisfying `vec(ρ̇) = L·vec(ρ)` in the row-major vectorization of
/// [`crate::tensor::vectorize`]. Trace preservation (`vec(I)†·L = 0`) is
/// checked at build time.
pub fn build_liouvillian(spec: &LindbladSpec) -> Result<Liouvillian> {
    spec.validate()?;
    let d = spec.dim();
    if d > MAX_SUPEROP_DIM {
        return Err(Error::Dimension(format!(
            "dense Liouvillian limited to dimension {MAX_SUPEROP_DIM}, got {d}"
        )));
    }
    let eye = identity(d);
    let h = &spec.hamiltonian;
    let minus_i = C64::new(0.0, -1.0);
    let mut l = (kron(h, &eye) - kron(&eye, &h.t().to_owned())).mapv(|z| z * minus_i);
    for jump in &spec.jumps {
        if jump.rate == 0.0 {
            continue;
        }
        let op = &jump.op;
        let op_conj = op.mapv(|z| z.conj());
        let op_dag_op = dagger(op).dot(op);
        let sandwich = kron(op, &op_conj);
        let anticomm = kron(&op_dag_op, &eye) + kron(&eye, &op_dag_op.t().to_owned());
        l = l + (sandwich - anticomm.mapv(|z| z * 0.5)).mapv(|z| z * jump.rate);
    }

    // vec(I)† · L = 0 within 1e-9: the generator cannot change the trace.
    let id_vec = vectorize(&eye);
    let mut worst: f64 = 0.0;
    for col in 0..d * d {
        let mut acc = C64::new(0.0, 0.0);
        for row in 0..d * d {
            acc += id_vec[row].conj() * l[(row, col)];
        }
        worst = worst.max(acc.norm());
    }
    if worst > 1e-9 {
        return Err(Error::Numerical(format!(
            "generator changes trace: |vec(I)†·L| = {worst:.3e}"
        )));
    }
    Ok(Liouvillian { dim: d, matrix: l })
}

/// Direct evaluation of the generator,
/// `ρ̇ = −i[H, ρ] + Σ_k r_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`,
/// used as the oracle for [`build_liouvillian`] and as the RK4 right-hand
/// side for systems too large for a dense superoperator.
pub fn apply_generator(spec: &LindbladSpec, rho: &CMat) -> Result<CMat> {
    let d = spec.dim();
    if rho.dim() != (d, d) {
        return Err(Error::Dimension(format!(
            "state is {:?}, generator needs {d}×{d}",
            rho.dim()
        )));
    }
    let h = &spec.hamiltonian;
    let minus_i = C64::new(0.0, -1.0);
    let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| z * minus_i);
    for jump in &spec.jumps {
        if jump.rate == 0.0 {
            continue;
        }
        let op = &jump.op;
        let op_dag = dagger(op);
        let op_dag_op = op_dag.dot(op);
        let gain = op.dot(rho).dot(&op_dag);
        let loss = (op_dag_op.dot(rho) + rho.dot(&op_dag_op)).mapv(|z| z * 0.5);
        out = out + (gain - loss).mapv(|z| z * jump.rate);
    }
    Ok(out)
}

/// Kernel of the generator: an HS-orthonormal basis plus the canonical
/// steady state (the Hilbert–Schmidt projection of the identity onto the
/// kernel, Hermitized and trace-normalized).
#[derive(Debug, Clone)]
pub struct SteadySpace {
    pub basis: Vec<CMat>,
    pub canonical: DensityMatrix,
}

impl SteadySpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// [`steady_space_with_tol`] at the default relative tolerance 1e-8.
pub fn steady_space(l: &Liouvillian) -> Result<SteadySpace> {
    steady_space_with_tol(l, 1e-8)
}

pub fn steady_space_with_tol(l: &Liouvillian, tol: f64) -> Result<SteadySpace> {
    let kernel = crate::tensor::null_space(&l.matrix, tol)?;
    if kernel.is_empty() {
        return Err(Error::Numerical(
            "generator has an empty kernel — no steady state found".into(),
        ));
    }
    // Right singular vectors are orthonormal in C^{D²}, i.e. HS-orthonormal
    // as matrices.
    let basis: Vec<CMat> = kernel
        .iter()
        .map(|v| unvectorize(v, l.dim))
        .collect::<Result<_>>()?;
    let mut projected = CMat::zeros((l.dim, l.dim));
    for b in &basis {
        let overlap = trace(b).conj();
        projected = projected + b.mapv(|z| z * overlap);
    }
    let hermitized = (&projected + &dagger(&projected)).mapv(|z| z * 0.5);
    let tr = trace(&hermitized);
    if tr.norm() < 1e-10 {
        return Err(Error::Numerical(
            "kernel is orthogonal to the identity — no trace-carrying steady state".into(),
        ));
    }
    let canonical = DensityMatrix::new(hermitized.mapv(|z| z / tr))?;
    Ok(SteadySpace { basis, canonical })
}

/// Spectral gap: −max{Re μ : Re μ < −1e-8} over generator eigenvalues.
/// Errors when every eigenvalue sits on the imaginary axis (no decaying
/// directions, e.g. the coherent limit).
pub fn liouvillian_gap(l: &Liouvillian) -> Result<f64> {
    let (values, _) = eig(&l.matrix)?;
    let mut slowest: Option<f64> = None;
    for v in &values {
        if v.re > 1e-8 {
            return Err(Error::Numerical(format!(
                "generator eigenvalue with positive real part {:.3e}",
                v.re
            )));
        }
        if v.re < -1e-8 {
            slowest = Some(slowest.map_or(v.re, |s: f64| s.max(v.re)));
        }
    }
    slowest
        .map(|s| -s)
        .ok_or_else(|| Error::Numerical("no decaying eigenvalues — gap undefined".into()))
}

fn symmetrize(m: &CMat) -> CMat {
    (m + &dagger(m)).mapv(|z| z * 0.5)
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidValue("time grid is empty".into()));
    }
    if t_grid[0] != 0.0 {
        return Err(Error::InvalidValue(format!(
            "time grid must start at 0, got {}",
            t_grid[0]
        )));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidValue("time grid must be strictly increasing".into()));
    }
    Ok(())
}

fn validate_observables(observables: &[(String, CMat)], d: usize) -> Result<()> {
    for (name, op) in observables {
        if op.dim() != (d, d) {
            return Err(Error::Dimension(format!(
                "observable {name:?} is {:?}, expected {d}×{d}",
                op.dim()
            )));
        }
        let defect = hermiticity_defect(op);
        if defect > 1e-10 * (1.0 + frobenius_norm(op)) {
            return Err(Error::NotHermitian { defect, tol: 1e-10 });
        }
    }
    Ok(())
}

fn expect(rho: &CMat, op: &CMat) -> f64 {
    let d = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += rho[(i, j)] * op[(j, i)];
        }
    }
    acc.re
}

/// Minimal configuration snapshot for a raw-spec evolution; the trajectory
/// wrappers overwrite this with the full model description.
fn raw_config(rho0: &DensityMatrix, t_grid: &[f64]) -> RunConfig {
    RunConfig {
        engine: Engine::Lindblad,
        model: None,
        bath: None,
        damping: None,
        initial_state: pure_amplitudes(rho0).unwrap_or_default(),
        n_collisions: None,
        record_substeps: None,
        t_final: t_grid.last().copied(),
        dt: None,
        seed: 0,
    }
}

/// Amplitudes of a rank-one density matrix, if it is one.
fn pure_amplitudes(rho: &DensityMatrix) -> Option<Vec<(f64, f64)>> {
    let purity = trace(&rho.matrix().dot(rho.matrix())).re;
    if (purity - 1.0).abs() > 1e-10 {
        return None;
    }
    let (values, vectors) = crate::tensor::eigh(rho.matrix()).ok()?;
    let top = values.len() - 1;
    if (values[top] - 1.0).abs() > 1e-9 {
        return None;
    }
    Some(vectors.column(top).iter().map(|a| (a.re, a.im)).collect())
}

fn finish_record(
    config: RunConfig,
    times: Vec<f64>,
    observables: &[(String, CMat)],
    series: Vec<Vec<f64>>,
) -> Result<TrajectoryRecord> {
    let record = TrajectoryRecord {
        seed: config.seed,
        config,
        collision_count: 0,
        times,
        observables: observables
            .iter()
            .map(|(name, _)| name.clone())
            .zip(series)
            .collect(),
    };
    record.validate()?;
    Ok(record)
}

/// Propagate by exact stepwise exponentials exp(L·Δt); propagators are
/// cached per distinct grid spacing, so uniform grids cost one exponential.
pub fn evolve_exact(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[(String, CMat)],
) -> Result<TrajectoryRecord> {
    validate_grid(t_grid)?;
    let d = spec.dim();
    if rho0.dim() != d {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, spec needs {d}",
            rho0.dim()
        )));
    }
    validate_observables(observables, d)?;
    let liouvillian = build_liouvillian(spec)?;

    let mut propagators: HashMap<u64, CMat> = HashMap::new();
    let mut state = vectorize(rho0.matrix());
    let mut series: Vec<Vec<f64>> = observables.iter().map(|_| Vec::new()).collect();
    let record = |vec_state: &CVec, series: &mut Vec<Vec<f64>>| -> Result<()> {
        let rho = symmetrize(&unvectorize(vec_state, d)?);
        let tr = trace(&rho);
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::Numerical(format!("trace drifted to {tr}")));
        }
        for ((_, op), out) in observables.iter().zip(series.iter_mut()) {
            out.push(expect(&rho, op));
        }
        Ok(())
    };

    record(&state, &mut series)?;
    for step in t_grid.windows(2) {
        let dt = step[1] - step[0];
        let propagator = match propagators.get(&dt.to_bits()) {
            Some(p) => p,
            None => {
                let p = expm_general(&liouvillian.matrix.mapv(|z| z * dt))?;
                propagators.entry(dt.to_bits()).or_insert(p)
            }
        };
        state = propagator.dot(&state);
        record(&state, &mut series)?;
    }
    finish_record(raw_config(rho0, t_grid), t_grid.to_vec(), observables, series)
}

/// Propagate with fixed-step RK4 on the matrix-valued generator. The step is
/// chosen from a spectral-norm bound on the generator to keep the truncation
/// error near 1e-9 per unit time. Used when the dense superoperator would be
/// too large, and as an independent cross-check of [`evolve_exact`].
pub fn evolve_rk4(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[(String, CMat)],
) -> Result<TrajectoryRecord> {
    validate_grid(t_grid)?;
    let d = spec.dim();
    if rho0.dim() != d {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, spec needs {d}",
            rho0.dim()
        )));
    }
    validate_observables(observables, d)?;
    spec.validate()?;

    // Generator action bound via spectral norms:
    // ‖L(ρ)‖ ≤ (2‖H‖₂ + 2 Σ_k r_k ‖L_k‖₂²) ‖ρ‖.
    let mut norm_bound = 2.0 * spectral_norm(&spec.hamiltonian)?;
    for jump in &spec.jumps {
        norm_bound += 2.0 * jump.rate * spectral_norm(&jump.op)?.powi(2);
    }
    // The leading RK4 remainder is ‖L‖⁵h⁵/120 per step, so ‖L‖⁵h⁴/120 per
    // unit time; solve that for the step at the target accuracy and keep
    // ‖L‖·h ≤ 0.1 for stability headroom.
    const ERR_PER_UNIT_TIME: f64 = 1e-9;
    let max_step = if norm_bound > 1e-9 {
        let accurate = (120.0 * ERR_PER_UNIT_TIME / norm_bound.powi(5)).powf(0.25);
        accurate.min(0.1 / norm_bound)
    } else {
        f64::MAX
    };

    // Precompute L†L once per jump for the right-hand side.
    let prepared: Vec<(f64, CMat, CMat, CMat)> = spec
        .jumps
        .iter()
        .filter(|j| j.rate > 0.0)
        .map(|j| {
            let op_dag = dagger(&j.op);
            let op_dag_op = op_dag.dot(&j.op);
            (j.rate, j.op.clone(), op_dag, op_dag_op)
        })
        .collect();
    let h = &spec.hamiltonian;
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |rho: &CMat| -> CMat {
        let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| z * minus_i);
        for (rate, op, op_dag, op_dag_op) in &prepared {
            let gain = op.dot(rho).dot(op_dag);
            let loss = (op_dag_op.dot(rho) + rho.dot(op_dag_op)).mapv(|z| z * 0.5);
            out = out + (gain - loss).mapv(|z| z * *rate);
        }
        out
    };

    let mut rho = rho0.matrix().clone();
    let mut series: Vec<Vec<f64>> = observables.iter().map(|_| Vec::new()).collect();
    let record = |rho: &CMat, series: &mut Vec<Vec<f64>>| -> Result<()> {
        let tr = trace(rho);
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::Numerical(format!("trace drifted to {tr}")));
        }
        for ((_, op), out) in observables.iter().zip(series.iter_mut()) {
            out.push(expect(rho, op));
        }
        Ok(())
    };

    record(&rho, &mut series)?;
    for step in t_grid.windows(2) {
        let span = step[1] - step[0];
        let n_sub = (span / max_step).ceil().max(1.0) as usize;
        let h_step = span / n_sub as f64;
        for _ in 0..n_sub {
            let k1 = rhs(&rho);
            let k2 = rhs(&(&rho + &k1.mapv(|z| z * (h_step / 2.0))));
            let k3 = rhs(&(&rho + &k2.mapv(|z| z * (h_step / 2.0))));
            let k4 = rhs(&(&rho + &k3.mapv(|z| z * h_step)));
            rho = &rho
                + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4)
                    .mapv(|z| z * (h_step / 6.0));
            rho = symmetrize(&rho);
        }
        record(&rho, &mut series)?;
    }
    finish_record(raw_config(rho0, t_grid), t_grid.to_vec(), observables, series)
}

/// Propagate a state over a time grid, choosing the exact-exponential path
/// for dimensions up to [`MAX_SUPEROP_DIM`] and RK4 beyond.
pub fn evolve(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    observables: &[(String, CMat)],
) -> Result<TrajectoryRecord> {
    if spec.dim() <= MAX_SUPEROP_DIM {
        evolve_exact(spec, rho0, t_grid, observables)
    } else {
        evolve_rk4(spec, rho0, t_grid, observables)
    }
}

/// Model-level wrapper around [`evolve`]: thermal damping on the contact
/// qubit, a uniform grid `0, dt, …, t_final`, and a full configuration
/// snapshot in the returned record.
pub fn lindblad_trajectory(
    model: &SpinModel,
    psi0: &StateVector,
    damping: &DampingConfig,
    t_final: f64,
    dt: f64,
    observables: &[(String, CMat)],
) -> Result<TrajectoryRecord> {
    damping.validate()?;
    if !(t_final > 0.0) || !(dt > 0.0) || dt > t_final {
        return Err(Error::InvalidValue(format!(
            "need 0 < dt ≤ t_final, got dt = {dt}, t_final = {t_final}"
        )));
    }
    if psi0.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, model needs {}",
            psi0.dim(),
            model.dim()
        )));
    }
    let spec = gksl_spec(model, damping.rate, damping.n_bar)?;
    let n_steps = (t_final / dt).round() as usize;
    let t_grid: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
    let mut record = evolve(&spec, &psi0.to_density(), &t_grid, observables)?;
    record.config = RunConfig {
        engine: Engine::Lindblad,
        model: Some(model.clone()),
        bath: None,
        damping: Some(*damping),
        initial_state: RunConfig::amplitudes_of(psi0.amplitudes()),
        n_collisions: None,
        record_substeps: None,
        t_final: Some(t_final),
        dt: Some(dt),
        seed: 0,
    };
    Ok(record)
}
