//! Dense complex linear algebra: Kronecker products, partial traces, matrix
//! exponentials, eigendecompositions, and the state carriers used by every
//! other module.
//!
//! Matrices are `ndarray` arrays of `Complex64`; eigenproblems, singular
//! values, and linear solves are delegated to `faer` behind thin conversion
//! shims so callers never see the backend types.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVec = Array1<C64>;
pub type CMat = Array2<C64>;

/// Default tolerance for Hermiticity checks. Callers propagating states
/// through long runs may loosen this via the `*_with_tol` variants.
pub const HERM_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::eye(dim)
}

/// Kronecker product `a ⊗ b` (row-major convention: the first factor is the
/// most significant index).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    ndarray::linalg::kron(a, b)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &CMat) -> C64 {
    m.diag().sum()
}

/// `[a, b] = ab − ba`; both operands must be square with equal dimension.
pub fn commutator(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() || a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "commutator needs equal square operands, got {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.dot(b) - b.dot(a))
}

/// Hilbert–Schmidt inner product `⟨a, b⟩ = Tr(a† b)`.
pub fn frobenius_inner(a: &CMat, b: &CMat) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "frobenius_inner needs equal shapes, got {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value (operator 2-norm), from the top eigenvalue of the
/// explicitly Hermitized Gram matrix `M†M`.
pub fn spectral_norm(m: &CMat) -> Result<f64> {
    let gram = dagger(m).dot(m);
    let gram = (&gram + &dagger(&gram)).mapv(|z| z * 0.5);
    let (values, _) = eigh(&gram)?;
    Ok(values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    hermiticity_defect(m) <= tol
}

fn require_hermitian(m: &CMat, tol: f64) -> Result<()> {
    let defect = hermiticity_defect(m);
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    Ok(())
}

/// Outer product `|a⟩⟨b|` of two equal-length vectors.
pub fn outer(a: &CVec, b: &CVec) -> Result<CMat> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "outer product needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    Ok(CMat::from_shape_fn((n, n), |(i, j)| a[i] * b[j].conj()))
}

/// Row-major (row-stacking) vectorization: `vec(m)[i·D + j] = m[i, j]`.
///
/// Superoperators throughout the crate follow this convention, so that
/// `vec(AρB) = (A ⊗ Bᵀ)·vec(ρ)`.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iter(m.iter().cloned())
}

/// Inverse of [`vectorize`] for a `dim × dim` matrix.
pub fn unvectorize(v: &CVec, dim: usize) -> Result<CMat> {
    if v.len() != dim * dim {
        return Err(Error::Dimension(format!(
            "cannot reshape length-{} vector into {dim}×{dim} matrix",
            v.len()
        )));
    }
    CMat::from_shape_vec((dim, dim), v.to_vec())
        .map_err(|e| Error::Dimension(format!("unvectorize: {e}")))
}

// ---------------------------------------------------------------------------
// Qubit-register indexing
// ---------------------------------------------------------------------------
//
// Qubit 1 is the leftmost tensor factor and therefore the most significant
// bit of a computational-basis index: qubit q (1-based) of an n-qubit index
// `i` is bit `n − q`.

/// Scatter the bits of `packed` (MSB-first over `qubits`) into their
/// positions inside a full n-qubit basis index.
fn spread_bits(packed: usize, qubits: &[usize], n_qubits: usize) -> usize {
    let mut out = 0usize;
    for (pos, &q) in qubits.iter().enumerate() {
        let bit = (packed >> (qubits.len() - 1 - pos)) & 1;
        out |= bit << (n_qubits - q);
    }
    out
}

/// Partial trace over the complement of `keep` for an `n_qubits`-qubit
/// density operator. `keep` is a set of 1-based qubit indices; the reduced
/// matrix retains the kept qubits in their original relative order.
pub fn partial_trace(rho: &CMat, n_qubits: usize, keep: &[usize]) -> Result<CMat> {
    let dim = 1usize
        .checked_shl(n_qubits as u32)
        .ok_or_else(|| Error::InvalidValue(format!("qubit count {n_qubits} too large")))?;
    if rho.dim() != (dim, dim) {
        return Err(Error::Dimension(format!(
            "partial_trace: expected {dim}×{dim} matrix for {n_qubits} qubits, got {:?}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidValue("partial_trace: empty keep set".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidValue(
            "partial_trace: duplicate qubit index in keep set".into(),
        ));
    }
    if kept[0] < 1 || *kept.last().unwrap() > n_qubits {
        return Err(Error::InvalidValue(format!(
            "partial_trace: keep set {kept:?} outside 1..={n_qubits}"
        )));
    }
    let traced: Vec<usize> = (1..=n_qubits).filter(|q| !kept.contains(q)).collect();
    let kdim = 1usize << kept.len();
    let tdim = 1usize << traced.len();

    let mut out = CMat::zeros((kdim, kdim));
    for a in 0..kdim {
        let ia = spread_bits(a, &kept, n_qubits);
        for b in 0..kdim {
            let ib = spread_bits(b, &kept, n_qubits);
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..tdim {
                let ie = spread_bits(e, &traced, n_qubits);
                acc += rho[(ia | ie, ib | ie)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// faer boundary
// ---------------------------------------------------------------------------

pub(crate) fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn from_faer(m: faer::MatRef<'_, C64>) -> CMat {
    CMat::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigendecomposition of a Hermitian matrix with the default Hermiticity
/// tolerance. Returns eigenvalues in ascending order and the matching
/// orthonormal eigenvectors as columns.
pub fn eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    eigh_with_tol(h, HERM_TOL)
}

/// [`eigh`] with an explicit Hermiticity tolerance, for callers that have
/// accumulated roundoff beyond the default.
pub fn eigh_with_tol(h: &CMat, herm_tol: f64) -> Result<(Vec<f64>, CMat)> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {:?}",
            h.dim()
        )));
    }
    require_hermitian(h, herm_tol)?;
    // Symmetrize before handing off so the backend sees an exactly Hermitian
    // operator regardless of roundoff in the input.
    let sym = (h + &dagger(h)).mapv(|z| z * 0.5);
    let evd = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("self-adjoint eigensolver failed: {e:?}")))?;
    let n = h.nrows();
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let values: Vec<f64> = order.iter().map(|&k| s[k].re).collect();
    let vectors = CMat::from_shape_fn((n, n), |(i, j)| u[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigendecomposition of a general square matrix: eigenvalues plus right
/// eigenvectors as columns (`m·v = μ·v`). No particular ordering.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "eig needs a square matrix, got {:?}",
            m.dim()
        )));
    }
    let evd = to_faer(m)
        .eigen()
        .map_err(|e| Error::Numerical(format!("general eigensolver failed: {e:?}")))?;
    let n = m.nrows();
    let s = evd.S().column_vector().to_owned();
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let vectors = from_faer(evd.U().as_ref());
    Ok((values, vectors))
}

/// Orthonormal basis of the (numerical) null space of `m`: right singular
/// vectors whose singular values fall at or below `rel_tol · max(σ_max, 1)`.
pub fn null_space(m: &CMat, rel_tol: f64) -> Result<Vec<CVec>> {
    let svd = to_faer(m)
        .svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector().to_owned();
    let v = svd.V();
    let n = m.ncols();
    let sigma_max = if s.nrows() > 0 { s[0].re } else { 0.0 };
    let cutoff = rel_tol * sigma_max.max(1.0);
    let mut basis = Vec::new();
    let rank_limit = s.nrows().min(n);
    for k in 0..n {
        let sigma = if k < rank_limit { s[k].re } else { 0.0 };
        if sigma <= cutoff {
            basis.push(CVec::from_shape_fn(n, |i| v[(i, k)]));
        }
    }
    Ok(basis)
}

pub(crate) fn solve_lu(a: &CMat, b: &CMat) -> Result<CMat> {
    use faer::prelude::Solve;
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "solve needs square a and matching b, got {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let lu = to_faer(a).partial_piv_lu();
    let x = lu.solve(to_faer(b));
    let out = from_faer(x.as_ref());
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("LU solve produced non-finite values".into()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Matrix exponentials
// ---------------------------------------------------------------------------

/// `exp(−i·h·t)` for Hermitian `h`, via spectral decomposition. The result is
/// unitary to the accuracy of the eigensolver.
pub fn expm_unitary(h: &CMat, t: f64) -> Result<CMat> {
    let (values, vectors) = eigh(h)?;
    // V · diag(e^{−iλt}) · V†: scale the columns of V, then multiply by V†.
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda * t);
        scaled.column_mut(j).mapv_inplace(|z| z * phase);
    }
    Ok(scaled.dot(&dagger(&vectors)))
}

/// Padé(13) coefficients for the scaling-and-squaring matrix exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const PADE13_THETA: f64 = 5.371920351148152;

fn one_norm(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        let col: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        worst = worst.max(col);
    }
    worst
}

/// `exp(m)` for a general square matrix via scaling-and-squaring with a
/// fixed-order Padé(13) approximant (no balancing). Intended for Liouvillian
/// propagators and other non-Hermitian generators.
pub fn expm_general(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expm_general needs a square matrix, got {:?}",
            m.dim()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidValue("expm_general: non-finite entry".into()));
    }
    let n = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let a = m.mapv(|z| z / C64::new(2f64.powi(squarings as i32), 0.0));

    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = |k: usize| C64::new(PADE13[k], 0.0);

    let u_inner = a6.mapv(|z| z * b(13)) + a4.mapv(|z| z * b(11)) + a2.mapv(|z| z * b(9));
    let u_poly = a6.dot(&u_inner)
        + a6.mapv(|z| z * b(7))
        + a4.mapv(|z| z * b(5))
        + a2.mapv(|z| z * b(3))
        + id.mapv(|z| z * b(1));
    let u = a.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * b(12)) + a4.mapv(|z| z * b(10)) + a2.mapv(|z| z * b(8));
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * b(6))
        + a4.mapv(|z| z * b(4))
        + a2.mapv(|z| z * b(2))
        + id.mapv(|z| z * b(0));

    let mut result = solve_lu(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// State carriers
// ---------------------------------------------------------------------------

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVec,
}

impl StateVector {
    /// Normalizes the given amplitudes; rejects the zero vector.
    pub fn new(amps: CVec) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidState(format!(
                "state vector norm {norm:.3e} is zero or non-finite"
            )));
        }
        Ok(Self {
            amps: amps.mapv(|z| z / norm),
        })
    }

    /// Computational basis state `|idx⟩` in a `dim`-dimensional space.
    pub fn basis(dim: usize, idx: usize) -> Result<Self> {
        if idx >= dim {
            return Err(Error::InvalidValue(format!(
                "basis index {idx} out of range for dimension {dim}"
            )));
        }
        let mut amps = CVec::zeros(dim);
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product needs equal dims, got {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|self⟩⟨other|` for equal dimensions.
    pub fn outer(&self, other: &StateVector) -> Result<CMat> {
        outer(&self.amps, &other.amps)
    }

    /// Tensor product `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let (n, m) = (self.dim(), other.dim());
        let mut amps = CVec::zeros(n * m);
        for i in 0..n {
            for j in 0..m {
                amps[i * m + j] = self.amps[i] * other.amps[j];
            }
        }
        StateVector { amps }
    }

    /// The pure density operator `|self⟩⟨self|`.
    pub fn to_density(&self) -> DensityMatrix {
        let mat = outer(&self.amps, &self.amps).expect("equal dims by construction");
        DensityMatrix::new_unchecked(mat)
    }
}

/// A density operator: Hermitian, unit trace, positive semidefinite.
///
/// The constructor verifies Hermiticity and trace and stores the matrix
/// exactly symmetrized; positivity is an O(D³) eigenvalue computation and is
/// checked on demand via [`DensityMatrix::validate`] (engines re-verify it in
/// their test suites rather than on every hot-loop step).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tolerances(mat, HERM_TOL, 1e-10)
    }

    pub fn with_tolerances(mat: CMat, herm_tol: f64, trace_tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {:?}",
                mat.dim()
            )));
        }
        require_hermitian(&mat, herm_tol)?;
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidState(format!(
                "density matrix trace {tr} differs from 1 beyond {trace_tol:.1e}"
            )));
        }
        let sym = (&mat + &dagger(&mat)).mapv(|z| z * 0.5);
        Ok(Self { mat: sym })
    }

    /// Wraps a matrix known-valid by construction (pure-state projectors,
    /// engine-internal symmetrized products).
    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        Self { mat }
    }

    /// Maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidValue("zero-dimensional state".into()));
        }
        let scale = C64::new(1.0 / dim as f64, 0.0);
        Ok(Self {
            mat: identity(dim).mapv(|z| z * scale),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    /// `Tr(ρ·op)` for a Hermitian observable; returns the real part.
    pub fn expectation(&self, op: &CMat) -> Result<f64> {
        if op.dim() != self.mat.dim() {
            return Err(Error::Dimension(format!(
                "observable shape {:?} does not match state dimension {}",
                op.dim(),
                self.dim()
            )));
        }
        // Tr(ρ·O) = Σ_{ij} ρ[i,j]·O[j,i]
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.mat[(i, j)] * op[(j, i)];
            }
        }
        Ok(acc.re)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (values, _) = eigh_with_tol(&self.mat, 1e-8)?;
        values
            .first()
            .copied()
            .ok_or_else(|| Error::Numerical("empty spectrum".into()))
    }

    /// Full validity check: Hermiticity, unit trace, and positivity down to
    /// `eig_floor` (e.g. −1e-10 for freshly built states, −1e-8 across runs).
    pub fn validate(&self, herm_tol: f64, trace_tol: f64, eig_floor: f64) -> Result<()> {
        require_hermitian(&self.mat, herm_tol)?;
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidState(format!(
                "trace {tr} differs from 1 beyond {trace_tol:.1e}"
            )));
        }
        let min = self.min_eigenvalue()?;
        if min < eig_floor {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:.3e} below floor {eig_floor:.1e}"
            )));
        }
        Ok(())
    }
}
