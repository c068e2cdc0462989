//! Spin models and bath ingredients: single-site Pauli operators, operator
//! embedding, the all-to-all XY (collective) Hamiltonian, the nearest-neighbor
//! flip-flop (XXZ-type) Hamiltonian, thermal ancilla states, product initial
//! states, and closed-form spectral predictions.

use ndarray::array;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{c, identity, kron, CMat, CVec, DensityMatrix, StateVector, C64};

/// Single-qubit operator labels.
///
/// Ladder convention: `Plus = (X + iY)/2 = |0⟩⟨1|` and
/// `Minus = (X − iY)/2 = |1⟩⟨0|`, with `Z|0⟩ = +|0⟩`. Under the local field
/// `−B·Z` (B > 0) the ground state is `|0⟩`, so `Minus` moves population
/// *into the excited manifold* and the operator that cools a qubit is
/// `Plus`. See [`crate::lindblad::cooling_jump`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// The 2×2 matrix for a [`Pauli`] label.
pub fn pauli(which: Pauli) -> CMat {
    match which {
        Pauli::X => array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        Pauli::Y => array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        Pauli::Z => array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        Pauli::Plus => array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]],
        Pauli::Minus => array![[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
    }
}

/// Embed a single-qubit operator at `site` (1-based) of an `n_qubits`
/// register: `I ⊗ … ⊗ op ⊗ … ⊗ I`.
pub fn embed(op: &CMat, site: usize, n_qubits: usize) -> Result<CMat> {
    if op.dim() != (2, 2) {
        return Err(Error::Dimension(format!(
            "embed expects a 2×2 operator, got {:?}",
            op.dim()
        )));
    }
    if site < 1 || site > n_qubits {
        return Err(Error::InvalidValue(format!(
            "site {site} outside 1..={n_qubits}"
        )));
    }
    let left = identity(1usize << (site - 1));
    let right = identity(1usize << (n_qubits - site));
    Ok(kron(&kron(&left, op), &right))
}

/// `Σᵢ Xᵢ` over all sites.
pub fn collective_sx(n_qubits: usize) -> Result<CMat> {
    if n_qubits == 0 {
        return Err(Error::InvalidValue("collective_sx: zero qubits".into()));
    }
    let x = pauli(Pauli::X);
    let mut out = CMat::zeros((1 << n_qubits, 1 << n_qubits));
    for site in 1..=n_qubits {
        out = out + embed(&x, site, n_qubits)?;
    }
    Ok(out)
}

fn check_model_size(n_qubits: usize, min: usize) -> Result<()> {
    if n_qubits < min {
        return Err(Error::InvalidValue(format!(
            "need at least {min} qubits, got {n_qubits}"
        )));
    }
    if n_qubits > 12 {
        return Err(Error::InvalidValue(format!(
            "{n_qubits} qubits exceeds the dense-simulation cap of 12"
        )));
    }
    Ok(())
}

/// All-to-all isotropic XY Hamiltonian with 1/N-scaled coupling and a
/// uniform transverse field:
///
/// `H = −(J/N)·Σ_{i<j}(XᵢXⱼ + YᵢYⱼ) − B·Σᵢ Zᵢ`.
///
/// Errors if `model.kind` is not [`ModelKind::Lmg`].
pub fn lmg_hamiltonian(model: &SpinModel) -> Result<CMat> {
    if model.kind != ModelKind::Lmg {
        return Err(Error::ConfigMismatch(format!(
            "lmg_hamiltonian called on a {:?} model",
            model.kind
        )));
    }
    build_lmg(model.n_qubits, model.coupling, model.field)
}

/// Computational-basis construction backing [`lmg_hamiltonian`]: the coupling
/// exchanges anti-aligned pairs (`|…0…1…⟩ ↔ |…1…0…⟩` with weight −2J/N) and
/// the field contributes `−B·(n − 2·popcount)` on the diagonal.
fn build_lmg(n_qubits: usize, coupling: f64, field: f64) -> Result<CMat> {
    check_model_size(n_qubits, 2)?;
    let dim = 1usize << n_qubits;
    let mut h = CMat::zeros((dim, dim));
    let hop = c(-2.0 * coupling / n_qubits as f64, 0.0);
    for a in 0..dim {
        let zsum = n_qubits as f64 - 2.0 * (a as u64).count_ones() as f64;
        h[(a, a)] = c(-field * zsum, 0.0);
        for i in 0..n_qubits {
            for j in (i + 1)..n_qubits {
                let (bi, bj) = (n_qubits - 1 - i, n_qubits - 1 - j);
                if ((a >> bi) ^ (a >> bj)) & 1 == 1 {
                    let b = a ^ (1 << bi) ^ (1 << bj);
                    h[(b, a)] += hop;
                }
            }
        }
    }
    Ok(h)
}

/// Nearest-neighbor flip-flop Hamiltonian with a uniform field and an
/// optional Ising term:
///
/// `H = J·Σ_bonds(XᵢXⱼ + YᵢYⱼ) + B·Σᵢ Zᵢ + Δ·Σ_bonds ZᵢZⱼ`,
///
/// where the bonds are `(i, i+1)` for `i = 1..n−1`, plus `(n, 1)` when
/// `model.periodic` is set. Errors if `model.kind` is not [`ModelKind::Xxz`].
pub fn xxz_hamiltonian(model: &SpinModel) -> Result<CMat> {
    if model.kind != ModelKind::Xxz {
        return Err(Error::ConfigMismatch(format!(
            "xxz_hamiltonian called on a {:?} model",
            model.kind
        )));
    }
    build_xxz(
        model.n_qubits,
        model.coupling,
        model.field,
        model.periodic,
        model.delta,
    )
}

fn build_xxz(
    n_qubits: usize,
    coupling: f64,
    field: f64,
    periodic: bool,
    delta: f64,
) -> Result<CMat> {
    check_model_size(n_qubits, 2)?;
    let dim = 1usize << n_qubits;
    let mut bonds: Vec<(usize, usize)> = (1..n_qubits).map(|i| (i, i + 1)).collect();
    if periodic {
        if n_qubits == 2 {
            return Err(Error::InvalidValue(
                "periodic boundary needs at least 3 sites".into(),
            ));
        }
        bonds.push((n_qubits, 1));
    }
    let hop = c(2.0 * coupling, 0.0);
    let mut h = CMat::zeros((dim, dim));
    for a in 0..dim {
        let zsum = n_qubits as f64 - 2.0 * (a as u64).count_ones() as f64;
        let mut diag = field * zsum;
        for &(i, j) in &bonds {
            let (bi, bj) = (n_qubits - i, n_qubits - j);
            let (za, zb) = ((a >> bi) & 1, (a >> bj) & 1);
            diag += delta * if za == zb { 1.0 } else { -1.0 };
            if za != zb {
                let b = a ^ (1 << bi) ^ (1 << bj);
                h[(b, a)] += hop;
            }
        }
        h[(a, a)] += c(diag, 0.0);
    }
    Ok(h)
}

/// Which Hamiltonian family a [`SpinModel`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// All-to-all XY with 1/N coupling and field −B·ΣZ ([`lmg_hamiltonian`]).
    Lmg,
    /// Nearest-neighbor flip-flop with field +B·ΣZ ([`xxz_hamiltonian`]).
    Xxz,
}

/// A fully specified spin model; the unit of energy is the coupling `J`
/// (figures and acceptance runs use `J = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinModel {
    pub kind: ModelKind,
    pub n_qubits: usize,
    pub coupling: f64,
    pub field: f64,
    /// Ring closure for [`ModelKind::Xxz`]; ignored for [`ModelKind::Lmg`].
    #[serde(default)]
    pub periodic: bool,
    /// Ising-term coefficient for [`ModelKind::Xxz`]; defaults to zero.
    #[serde(default)]
    pub delta: f64,
}

impl SpinModel {
    pub fn lmg(n_qubits: usize, coupling: f64, field: f64) -> Result<Self> {
        check_model_size(n_qubits, 2)?;
        Ok(Self {
            kind: ModelKind::Lmg,
            n_qubits,
            coupling,
            field,
            periodic: false,
            delta: 0.0,
        })
    }

    pub fn xxz(n_qubits: usize, coupling: f64, field: f64, periodic: bool) -> Result<Self> {
        check_model_size(n_qubits, 2)?;
        Ok(Self {
            kind: ModelKind::Xxz,
            n_qubits,
            coupling,
            field,
            periodic,
            delta: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn hamiltonian(&self) -> Result<CMat> {
        match self.kind {
            ModelKind::Lmg => build_lmg(self.n_qubits, self.coupling, self.field),
            ModelKind::Xxz => {
                build_xxz(self.n_qubits, self.coupling, self.field, self.periodic, self.delta)
            }
        }
    }

    /// The same model at a different field value.
    pub fn with_field(&self, field: f64) -> Self {
        Self { field, ..self.clone() }
    }
}

/// Eigenvalues (ascending) of the model Hamiltonian at each field value.
pub fn spectrum_sweep(model: &SpinModel, field_values: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut out = Vec::with_capacity(field_values.len());
    for &b in field_values {
        let h = model.with_field(b).hamiltonian()?;
        let (values, _) = crate::tensor::eigh(&h)?;
        out.push((b, values));
    }
    Ok(out)
}

/// Closed-form facts about the collective-model spectrum at coupling `J = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPrediction {
    pub n_qubits: usize,
    pub field: f64,
    /// Energy of the fully aligned state `|0…0⟩`: `−N·B`.
    pub aligned_energy: f64,
    /// Energy of the (N−1)-fold degenerate single-flip band: `2/N − (N−2)·B`.
    pub band_energy: f64,
    pub band_degeneracy: usize,
    /// Gap between the band and the aligned state: `2/N + 2B`. This is the
    /// angular frequency of the emergent oscillation.
    pub frequency: f64,
}

/// Spectral prediction for [`lmg_hamiltonian`] with `J = 1`; requires
/// `n ≥ 3` (the degenerate band needs at least two spectator sites).
pub fn lmg_prediction(n_qubits: usize, field: f64) -> Result<SpectralPrediction> {
    if n_qubits < 3 {
        return Err(Error::InvalidValue(format!(
            "spectral prediction needs n ≥ 3, got {n_qubits}"
        )));
    }
    let n = n_qubits as f64;
    let aligned_energy = -n * field;
    let band_energy = 2.0 / n - (n - 2.0) * field;
    Ok(SpectralPrediction {
        n_qubits,
        field,
        aligned_energy,
        band_energy,
        band_degeneracy: n_qubits - 1,
        frequency: 2.0 / n + 2.0 * field,
    })
}

/// Gibbs state of a single ancilla qubit with level splitting `field` at
/// inverse temperature `beta`:
///
/// `ρ_A = diag(p₀, 1 − p₀)` with `p₀ = (1 + tanh(β·field/2))/2`,
///
/// where `|0⟩` is the ground state of the ancilla's local `−field·Z/2`-type
/// splitting. `beta = +∞` gives exactly `|0⟩⟨0|`; `beta = 0` (or zero field)
/// gives the maximally mixed qubit.
pub fn thermal_ancilla(beta: f64, field: f64) -> Result<DensityMatrix> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidValue(format!(
            "inverse temperature must be non-negative, got {beta}"
        )));
    }
    if field.is_nan() || field.is_infinite() {
        return Err(Error::InvalidValue(format!(
            "ancilla splitting must be finite, got {field}"
        )));
    }
    let mut x = 0.5 * beta * field;
    if x.is_nan() {
        // β = ∞ with zero splitting: every population ratio is 1.
        x = 0.0;
    }
    let p0 = 0.5 * (1.0 + x.tanh());
    let mut mat = CMat::zeros((2, 2));
    mat[(0, 0)] = c(p0, 0.0);
    mat[(1, 1)] = c(1.0 - p0, 0.0);
    DensityMatrix::new(mat)
}

/// Single-site preparations for product initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SitePreparation {
    /// `|0⟩`
    #[serde(rename = "0")]
    Zero,
    /// `|1⟩`
    #[serde(rename = "1")]
    One,
    /// `(|0⟩ + |1⟩)/√2`
    #[serde(rename = "+")]
    Plus,
    /// `(|0⟩ − |1⟩)/√2`
    #[serde(rename = "-")]
    Minus,
}

impl std::str::FromStr for SitePreparation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Self::Zero),
            "1" => Ok(Self::One),
            "+" => Ok(Self::Plus),
            "-" => Ok(Self::Minus),
            other => Err(Error::InvalidValue(format!(
                "unknown site preparation '{other}' (expected 0, 1, + or -)"
            ))),
        }
    }
}

impl SitePreparation {
    pub fn amplitudes(self) -> CVec {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::Zero => CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            Self::One => CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Self::Plus => CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
            Self::Minus => CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
        }
    }
}

/// Product state `|l₁⟩ ⊗ |l₂⟩ ⊗ … ⊗ |l_n⟩`.
pub fn initial_state(sites: &[SitePreparation]) -> Result<StateVector> {
    if sites.is_empty() {
        return Err(Error::InvalidValue("initial_state: no sites given".into()));
    }
    let mut amps = CVec::from_vec(vec![C64::new(1.0, 0.0)]);
    for prep in sites {
        let site = prep.amplitudes();
        let mut next = CVec::zeros(amps.len() * 2);
        for (i, a) in amps.iter().enumerate() {
            for (j, s) in site.iter().enumerate() {
                next[i * 2 + j] = a * s;
            }
        }
        amps = next;
    }
    StateVector::new(amps)
}

/// Parse a compact preparation string such as `"0+-0"` into site labels.
pub fn parse_preparation(s: &str) -> Result<Vec<SitePreparation>> {
    s.chars()
        .map(|ch| ch.to_string().parse::<SitePreparation>())
        .collect()
}

/// A named single-site Pauli expectation operator, e.g. `("sx2", σx on q₂)`.
/// Ladder operators are rejected (not Hermitian observables).
pub fn site_observable(p: Pauli, site: usize, n_qubits: usize) -> Result<(String, CMat)> {
    let label = match p {
        Pauli::X => "sx",
        Pauli::Y => "sy",
        Pauli::Z => "sz",
        Pauli::Plus | Pauli::Minus => {
            return Err(Error::InvalidValue(
                "ladder operators are not Hermitian observables".into(),
            ))
        }
    };
    Ok((format!("{label}{site}"), embed(&pauli(p), site, n_qubits)?))
}

/// Population of the contact qubit's `|0⟩` level, named `"p0_q1"`.
pub fn ground_population_q1(n_qubits: usize) -> Result<(String, CMat)> {
    let mut p0 = CMat::zeros((2, 2));
    p0[(0, 0)] = c(1.0, 0.0);
    Ok(("p0_q1".into(), embed(&p0, 1, n_qubits)?))
}

/// Resolve an observable name of the form `sx<k>`, `sy<k>`, `sz<k>`, or
/// `p0_q1` into its operator.
pub fn observable_by_name(name: &str, n_qubits: usize) -> Result<(String, CMat)> {
    if name == "p0_q1" {
        return ground_population_q1(n_qubits);
    }
    let unknown = || Error::UnknownObservable(name.to_string());
    if name.len() < 3 {
        return Err(unknown());
    }
    let (prefix, site_str) = name.split_at(2);
    let p = match prefix {
        "sx" => Pauli::X,
        "sy" => Pauli::Y,
        "sz" => Pauli::Z,
        _ => return Err(unknown()),
    };
    let site: usize = site_str.parse().map_err(|_| unknown())?;
    if site == 0 || site > n_qubits {
        return Err(unknown());
    }
    site_observable(p, site, n_qubits)
}

/// The default recording set: ⟨σx⟩ on every site plus the contact qubit's
/// ground-level population.
pub fn standard_observables(n_qubits: usize) -> Result<Vec<(String, CMat)>> {
    let mut out = Vec::with_capacity(n_qubits + 1);
    for site in 1..=n_qubits {
        out.push(site_observable(Pauli::X, site, n_qubits)?);
    }
    out.push(ground_population_q1(n_qubits)?);
    Ok(out)
}

/// Collision-bath parameters: ancilla temperature and splitting, collision
/// duration, and waiting-time rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    /// Inverse temperature β ∈ [0, ∞]. Serialized as the string `"inf"` when
    /// infinite, since JSON lacks an infinity literal.
    #[serde(with = "crate::serde_util::inf_float")]
    pub beta: f64,
    /// Ancilla level splitting entering the Gibbs weight.
    pub field: f64,
    /// Duration τ of each system–ancilla collision.
    pub tau: f64,
    /// Rate γ of the exponential waiting-time distribution.
    pub gamma: f64,
}

impl BathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::InvalidValue(format!("beta must be ≥ 0, got {}", self.beta)));
        }
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(Error::InvalidValue(format!("tau must be > 0, got {}", self.tau)));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::InvalidValue(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !self.field.is_finite() {
            return Err(Error::InvalidValue(format!("bath field must be finite, got {}", self.field)));
        }
        Ok(())
    }

    pub fn ancilla(&self) -> Result<DensityMatrix> {
        thermal_ancilla(self.beta, self.field)
    }

    /// Non-fatal diagnostics. The continuous-bath correspondence assumes
    /// γτ ≪ 1 (collisions short compared to waiting times); the reference
    /// figure parameters themselves sit at γτ = 0.5, so this is a warning,
    /// not an error.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let product = self.gamma * self.tau;
        if product > 0.1 {
            out.push(format!(
                "γ·τ = {product:.3} is not ≪ 1; the dilute-collision (continuous-bath) \
                 correspondence degrades as this product grows"
            ));
        }
        out
    }
}
