//! Stochastic repeated-interaction engine.
//!
//! The open dynamics is built from discrete collisions: the system evolves
//! freely for a random waiting time θ ~ Exp(γ), then interacts for a fixed
//! duration τ with a fresh thermal ancilla through an excitation-exchange
//! coupling on the contact qubit (site 1), after which the ancilla is
//! discarded. The module provides the waiting-time sampler, the joint
//! collision unitary, the reduced single-collision channel in both
//! apply-and-trace and Kraus form, superoperator spectra, and the full
//! trajectory simulator.

use ndarray::linalg::kron;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{pauli, BathConfig, Pauli, SpinModel};
use crate::record::{Engine, RunConfig, TrajectoryRecord};
use crate::tensor::{
    dagger, eig, eigh, expm_unitary, frobenius_norm, hermiticity_defect, identity, unvectorize,
    C64, CMat, DensityMatrix, StateVector,
};

/// Tolerance for the Kraus completeness relation Σ Ω†Ω = I.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Default tolerance for locating unit-modulus channel eigenvalues.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// Numerical floor for sampled waiting times, guaranteeing strictly
/// increasing record times. Exponential variates this small occur with
/// probability ~γ·1e-12 and carry no physical weight.
const MIN_THETA: f64 = 1e-12;

/// One exponential waiting-time variate with density γ·e^{−γθ}.
pub fn sample_waiting_time<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidValue(format!(
            "waiting-time rate must be positive and finite, got {gamma}"
        )));
    }
    let u: f64 = rng.gen(); // [0, 1)
    Ok(-(1.0 - u).ln() / gamma)
}

/// Random-access view of a trajectory's waiting-time sequence.
///
/// Each collision index owns a fixed block of the counter-based RNG stream,
/// so `theta(j)` is reproducible in isolation and independent of evaluation
/// order — sweeps can re-derive any collision's waiting time without
/// replaying the trajectory.
#[derive(Debug, Clone, Copy)]
pub struct WaitingTimes {
    seed: u64,
    gamma: f64,
}

impl WaitingTimes {
    pub fn new(seed: u64, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidValue(format!(
                "waiting-time rate must be positive and finite, got {gamma}"
            )));
        }
        Ok(Self { seed, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The waiting time before collision `index` (0-based).
    pub fn theta(&self, index: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // Four 32-bit words per draw leaves room for the two words a single
        // f64 consumes, keeping blocks disjoint.
        rng.set_word_pos(u128::from(index) * 4);
        sample_waiting_time(&mut rng, self.gamma).expect("rate validated at construction")
    }
}

/// Excitation-exchange coupling (1/2)(σx⊗σx + σy⊗σy) on (contact qubit,
/// ancilla): the flip-flop matrix exchanging |01⟩ ↔ |10⟩ with unit weight.
pub fn interaction_hamiltonian() -> CMat {
    let x = pauli(Pauli::X);
    let y = pauli(Pauli::Y);
    (kron(&x, &x) + kron(&y, &y)).mapv(|z| z * 0.5)
}

/// Joint unitary U = exp[−iτ(H_S⊗I_A + H_int)] of one collision, with the
/// exchange coupling embedded on (site 1, ancilla). The ancilla's own
/// Hamiltonian is deliberately absent from the generator — it only shapes
/// the thermal ancilla state; see [`collision_unitary_with_ancilla_field`]
/// for the variant that includes it.
pub fn collision_unitary(h_s: &CMat, tau: f64) -> Result<CMat> {
    joint_unitary(h_s, tau, None)
}

/// [`collision_unitary`] with the ancilla's free Hamiltonian −(b_a/2)·σz
/// included in the generator, for sensitivity studies. `b_a` is the ancilla
/// level splitting, matching the Gibbs weight convention of
/// [`crate::models::thermal_ancilla`].
pub fn collision_unitary_with_ancilla_field(h_s: &CMat, tau: f64, b_a: f64) -> Result<CMat> {
    if !b_a.is_finite() {
        return Err(Error::InvalidValue(format!("ancilla field must be finite, got {b_a}")));
    }
    joint_unitary(h_s, tau, Some(b_a))
}

fn joint_unitary(h_s: &CMat, tau: f64, ancilla_field: Option<f64>) -> Result<CMat> {
    let d = h_s.nrows();
    if h_s.ncols() != d || d < 2 || !d.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "system Hamiltonian must be square with power-of-two dimension ≥ 2, got {:?}",
            h_s.dim()
        )));
    }
    let defect = hermiticity_defect(h_s);
    if defect > 1e-9 * (1.0 + frobenius_norm(h_s)) {
        return Err(Error::NotHermitian { defect, tol: 1e-9 });
    }
    if !tau.is_finite() {
        return Err(Error::InvalidValue(format!("collision duration must be finite, got {tau}")));
    }
    let x = pauli(Pauli::X);
    let y = pauli(Pauli::Y);
    let mid = identity(d / 2);
    let coupling =
        (kron(&kron(&x, &mid), &x) + kron(&kron(&y, &mid), &y)).mapv(|z| z * 0.5);
    let mut h_joint = kron(h_s, &identity(2)) + coupling;
    if let Some(b_a) = ancilla_field {
        h_joint = h_joint - kron(&identity(d), &pauli(Pauli::Z)).mapv(|z| z * (b_a / 2.0));
    }
    expm_unitary(&h_joint, tau)
}

/// Partial trace over the last tensor factor of dimension `d_last`.
pub(crate) fn trace_out_last(joint: &CMat, d_first: usize, d_last: usize) -> CMat {
    let mut out = CMat::zeros((d_first, d_first));
    for i in 0..d_first {
        for j in 0..d_first {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d_last {
                acc += joint[(i * d_last + k, j * d_last + k)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// One collision as an explicit construct: Tr_A[U(ρ_S ⊗ ρ_A)U†].
pub fn apply_collision(
    rho_s: &DensityMatrix,
    rho_a: &DensityMatrix,
    u: &CMat,
) -> Result<DensityMatrix> {
    let (d_s, d_a) = (rho_s.dim(), rho_a.dim());
    if u.nrows() != d_s * d_a || u.ncols() != d_s * d_a {
        return Err(Error::Dimension(format!(
            "collision unitary is {:?} but system ⊗ ancilla is {}×{}",
            u.dim(),
            d_s * d_a,
            d_s * d_a
        )));
    }
    let joint = kron(rho_s.matrix(), rho_a.matrix());
    let evolved = u.dot(&joint).dot(&dagger(u));
    let reduced = trace_out_last(&evolved, d_s, d_a);
    DensityMatrix::new(symmetrize(&reduced))
}

fn symmetrize(m: &CMat) -> CMat {
    (m + &dagger(m)).mapv(|z| z * 0.5)
}

/// The reduced map of one full step (free evolution for θ, then a collision
/// of duration τ) in Kraus form.
#[derive(Debug, Clone)]
pub struct CollisionChannel {
    system_dim: usize,
    kraus_ops: Vec<CMat>,
    pub tau: f64,
    pub theta: f64,
}

impl CollisionChannel {
    /// Build a channel from explicit Kraus operators, checking shapes and
    /// the completeness relation Σ Ω†Ω = I to [`COMPLETENESS_TOL`].
    pub fn from_ops(
        system_dim: usize,
        kraus_ops: Vec<CMat>,
        tau: f64,
        theta: f64,
    ) -> Result<Self> {
        if kraus_ops.is_empty() {
            return Err(Error::InvalidValue("channel needs at least one Kraus operator".into()));
        }
        for (k, op) in kraus_ops.iter().enumerate() {
            if op.dim() != (system_dim, system_dim) {
                return Err(Error::Dimension(format!(
                    "Kraus operator {k} is {:?}, expected {system_dim}×{system_dim}",
                    op.dim()
                )));
            }
        }
        let channel = Self { system_dim, kraus_ops, tau, theta };
        let defect = channel.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::Numerical(format!(
                "Kraus completeness defect {defect:.3e} exceeds {COMPLETENESS_TOL:.0e}"
            )));
        }
        Ok(channel)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn kraus_ops(&self) -> &[CMat] {
        &self.kraus_ops
    }

    /// ‖Σ Ω†Ω − I‖_F.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = CMat::zeros((self.system_dim, self.system_dim));
        for op in &self.kraus_ops {
            sum = sum + dagger(op).dot(op);
        }
        frobenius_norm(&(sum - identity(self.system_dim)))
    }

    /// Channel action Σ Ω X Ω† on an arbitrary matrix argument.
    pub fn apply_matrix(&self, x: &CMat) -> Result<CMat> {
        if x.dim() != (self.system_dim, self.system_dim) {
            return Err(Error::Dimension(format!(
                "channel argument is {:?}, expected {d}×{d}",
                x.dim(),
                d = self.system_dim
            )));
        }
        let mut out = CMat::zeros((self.system_dim, self.system_dim));
        for op in &self.kraus_ops {
            out = out + op.dot(x).dot(&dagger(op));
        }
        Ok(out)
    }

    /// Channel action on a state, returning a validated state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        DensityMatrix::new(symmetrize(&out))
    }
}

/// Kraus decomposition of one full step: Ω_{αβ} = √p_α ⟨β|U_coll|α⟩ · U_S(θ),
/// with {p_α, |α⟩} the ancilla eigenpairs and ⟨β|·|α⟩ partial matrix elements
/// on the ancilla factor. All d_A² operators are kept, including zero-weight
/// ones (p_α = 0), preserving the (α, β) indexing.
pub fn kraus_set(h_s: &CMat, tau: f64, theta: f64, rho_a: &DensityMatrix) -> Result<CollisionChannel> {
    let u_coll = collision_unitary(h_s, tau)?;
    let u_free = expm_unitary(h_s, theta)?;
    let d_s = h_s.nrows();
    let d_a = rho_a.dim();
    let (populations, basis) = eigh(rho_a.matrix())?;
    for &p in &populations {
        if p < -1e-10 {
            return Err(Error::InvalidState(format!(
                "ancilla population {p:.3e} is significantly negative"
            )));
        }
    }
    // Rotate the collision unitary into the ancilla eigenbasis once; the
    // (β, α) partial matrix elements are then plain sub-blocks.
    let rotate = kron(&identity(d_s), &basis);
    let u_eig = dagger(&rotate).dot(&u_coll).dot(&rotate);
    let mut kraus_ops = Vec::with_capacity(d_a * d_a);
    for (alpha, &p) in populations.iter().enumerate() {
        let weight = p.max(0.0).sqrt();
        for beta in 0..d_a {
            let mut block = CMat::zeros((d_s, d_s));
            for i in 0..d_s {
                for j in 0..d_s {
                    block[(i, j)] = u_eig[(i * d_a + beta, j * d_a + alpha)];
                }
            }
            kraus_ops.push(block.dot(&u_free).mapv(|z| z * weight));
        }
    }
    CollisionChannel::from_ops(d_s, kraus_ops, tau, theta)
}

/// Largest system dimension for which dense superoperators are built
/// (superoperator side D² ≤ 1024).
pub const MAX_SUPEROP_DIM: usize = 32;

/// Dense superoperator S with S·vec(ρ) = vec(Λ[ρ]), in the same row-major
/// vectorization as [`crate::tensor::vectorize`]: S = Σ Ω ⊗ conj(Ω).
pub fn channel_superoperator(channel: &CollisionChannel) -> Result<CMat> {
    let d = channel.system_dim();
    if d > MAX_SUPEROP_DIM {
        return Err(Error::Dimension(format!(
            "superoperator limited to system dimension {MAX_SUPEROP_DIM}, got {d}"
        )));
    }
    let mut s = CMat::zeros((d * d, d * d));
    for op in channel.kraus_ops() {
        let conj = op.mapv(|z| z.conj());
        s = s + kron(op, &conj);
    }
    Ok(s)
}

/// Eigenstructure of a channel superoperator: the full spectrum sorted by
/// modulus, the peripheral (unit-modulus) subset, and the fixed point.
#[derive(Debug, Clone)]
pub struct ChannelSpectrum {
    /// All eigenvalues, modulus-descending (ties broken by real then
    /// imaginary part, descending, for deterministic output).
    pub eigenvalues: Vec<C64>,
    /// Eigenvalues with |μ| ≥ 1 − tol.
    pub peripheral: Vec<C64>,
    /// Canonical fixed point: the Hilbert–Schmidt projection of the identity
    /// onto the unit-eigenvalue eigenspace, Hermitized and trace-normalized.
    pub fixed_point: DensityMatrix,
    /// HS-orthonormal basis of the unit-eigenvalue eigenspace.
    pub fixed_space: Vec<CMat>,
    pub tol: f64,
}

/// [`channel_spectrum_with_tol`] at the default tolerance [`SPECTRUM_TOL`].
pub fn channel_spectrum(superop: &CMat) -> Result<ChannelSpectrum> {
    channel_spectrum_with_tol(superop, SPECTRUM_TOL)
}

pub fn channel_spectrum_with_tol(superop: &CMat, tol: f64) -> Result<ChannelSpectrum> {
    let side = superop.nrows();
    if superop.ncols() != side {
        return Err(Error::Dimension(format!("superoperator must be square, got {:?}", superop.dim())));
    }
    let d = (side as f64).sqrt().round() as usize;
    if d * d != side {
        return Err(Error::Dimension(format!(
            "superoperator side {side} is not a perfect square"
        )));
    }
    let (values, vectors) = eig(superop)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (values[a], values[b]);
        zb.norm()
            .partial_cmp(&za.norm())
            .unwrap()
            .then(zb.re.partial_cmp(&za.re).unwrap())
            .then(zb.im.partial_cmp(&za.im).unwrap())
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&k| values[k]).collect();
    if let Some(max_mod) = eigenvalues.first().map(|z| z.norm()) {
        if max_mod > 1.0 + 1e-8 {
            return Err(Error::Numerical(format!(
                "channel spectral radius {max_mod:.12} exceeds 1"
            )));
        }
    }
    let peripheral: Vec<C64> =
        eigenvalues.iter().copied().filter(|z| z.norm() >= 1.0 - tol).collect();

    // Unit-eigenvalue eigenspace → HS-orthonormal matrix basis.
    let mut fixed_space: Vec<CMat> = Vec::new();
    for &k in &order {
        if (values[k] - C64::new(1.0, 0.0)).norm() <= tol {
            let mat = unvectorize(&vectors.column(k).to_owned(), d)?;
            fixed_space.push(mat);
        }
    }
    if fixed_space.is_empty() {
        return Err(Error::Numerical(format!(
            "no channel eigenvalue within {tol:.1e} of 1 — superoperator is not trace-preserving"
        )));
    }
    let fixed_space = hs_orthonormalize(fixed_space);

    // Canonical fixed point: project the identity onto the fixed space.
    let mut projected = CMat::zeros((d, d));
    for basis_mat in &fixed_space {
        // ⟨B, I⟩_HS = conj(Tr B).
        let overlap = basis_mat.diag().sum().conj();
        projected = projected + basis_mat.mapv(|z| z * overlap);
    }
    let hermitized = symmetrize(&projected);
    let tr = hermitized.diag().sum();
    if tr.norm() < 1e-12 {
        return Err(Error::Numerical(
            "fixed space is orthogonal to the identity — no trace-carrying fixed point".into(),
        ));
    }
    let fixed_point = DensityMatrix::new(hermitized.mapv(|z| z / tr))?;

    Ok(ChannelSpectrum { eigenvalues, peripheral, fixed_point, fixed_space, tol })
}

/// Gram–Schmidt in the Hilbert–Schmidt inner product, dropping members that
/// become numerically dependent.
pub(crate) fn hs_orthonormalize(mats: Vec<CMat>) -> Vec<CMat> {
    let mut basis: Vec<CMat> = Vec::with_capacity(mats.len());
    for mut m in mats {
        for b in &basis {
            let overlap: C64 = b.iter().zip(m.iter()).map(|(x, y)| x.conj() * y).sum();
            m = m - b.mapv(|z| z * overlap);
        }
        let norm = frobenius_norm(&m);
        if norm > 1e-10 {
            basis.push(m.mapv(|z| z / norm));
        }
    }
    basis
}

/// Simulate a full repeated-interaction trajectory.
///
/// Each step applies free evolution U_S(θ_j) first, then one collision; wall
/// time advances by θ_j + τ per step. Observables are recorded at t = 0,
/// at `record_substeps` evenly spaced instants inside every free flight, and
/// immediately after every collision; the record ends at the last collision.
/// The trajectory is a pure function of (config, seed).
pub fn run_trajectory(
    model: &SpinModel,
    psi0: &StateVector,
    bath: &BathConfig,
    n_collisions: usize,
    observables: &[(String, CMat)],
    seed: u64,
    record_substeps: usize,
) -> Result<TrajectoryRecord> {
    bath.validate()?;
    if n_collisions == 0 {
        return Err(Error::InvalidValue("need at least one collision".into()));
    }
    let d = model.dim();
    if psi0.dim() != d {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, model needs {d}",
            psi0.dim()
        )));
    }
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

    let h_s = model.hamiltonian()?;
    let u_coll = collision_unitary(&h_s, bath.tau)?;
    let u_coll_dag = dagger(&u_coll);
    let rho_a = bath.ancilla()?;
    let waiting = WaitingTimes::new(seed, bath.gamma)?;

    // Spectral form of H_S so free propagators for arbitrary durations are a
    // column scaling instead of a fresh matrix exponential.
    let (evals, evecs) = eigh(&h_s)?;
    let evecs_dag = dagger(&evecs);
    let free_u = |s: f64| -> CMat {
        let mut scaled = evecs.clone();
        for (col, &e) in evals.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e * s);
            scaled.column_mut(col).mapv_inplace(|z| z * phase);
        }
        scaled.dot(&evecs_dag)
    };

    let n_points = 1 + n_collisions * (record_substeps + 1);
    let mut times = Vec::with_capacity(n_points);
    let mut series: Vec<Vec<f64>> =
        observables.iter().map(|_| Vec::with_capacity(n_points)).collect();
    let mut record = |t: f64, rho: &CMat, series: &mut Vec<Vec<f64>>| {
        times.push(t);
        for ((_, op), out) in observables.iter().zip(series.iter_mut()) {
            out.push(expect(rho, op));
        }
    };

    let mut rho = psi0.to_density().into_matrix();
    let mut t = 0.0;
    record(0.0, &rho, &mut series);

    for j in 0..n_collisions {
        let theta = waiting.theta(j as u64).max(MIN_THETA);
        for k in 1..=record_substeps {
            let s = theta * k as f64 / (record_substeps + 1) as f64;
            let u = free_u(s);
            let snapshot = u.dot(&rho).dot(&dagger(&u));
            record(t + s, &snapshot, &mut series);
        }
        let u = free_u(theta);
        rho = u.dot(&rho).dot(&dagger(&u));

        let joint = kron(&rho, rho_a.matrix());
        let evolved = u_coll.dot(&joint).dot(&u_coll_dag);
        rho = symmetrize(&trace_out_last(&evolved, d, 2));

        t += theta + bath.tau;
        record(t, &rho, &mut series);
    }

    let config = RunConfig {
        engine: Engine::Collision,
        model: Some(model.clone()),
        bath: Some(bath.clone()),
        damping: None,
        initial_state: RunConfig::amplitudes_of(psi0.amplitudes()),
        n_collisions: Some(n_collisions),
        record_substeps: Some(record_substeps),
        t_final: None,
        dt: None,
        seed,
    };
    let record = TrajectoryRecord {
        config,
        seed,
        collision_count: n_collisions,
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

/// Re(Tr[ρ O]) without intermediate allocation.
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
