//! Hilbert spaces of one bosonic mode coupled to `N` two-level systems.
//!
//! Ordering contract: every composite object is `field ⊗ qubits`, with the
//! field index as the slow index. A single qubit is stored as `[|e⟩, |g⟩]`
//! so that `σ_z = diag(+1, -1)`; in a multi-qubit register the first qubit is
//! the most significant digit. In the symmetric (Dicke) basis the state index
//! `i` corresponds to `m = -j + i`, i.e. `J_z = diag(-j, ..., j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh_real, hermiticity_error, kron, CMatrix, RMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Full `2^N`-dimensional qubit register.
    FullTensor,
    /// Maximal angular-momentum multiplet `j = N/2`, dimension `N + 1`.
    DickeSymmetric,
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Basis::FullTensor => write!(f, "full_tensor"),
            Basis::DickeSymmetric => write!(f, "dicke_symmetric"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub qubit_count: usize,
    /// Photon states `0..fock_cutoff`.
    pub fock_cutoff: usize,
    pub basis: Basis,
}

impl SpaceDescriptor {
    pub fn dim_qubits(&self) -> usize {
        match self.basis {
            Basis::FullTensor => 1usize << self.qubit_count,
            Basis::DickeSymmetric => self.qubit_count + 1,
        }
    }

    pub fn dim_total(&self) -> usize {
        self.dim_qubits() * self.fock_cutoff
    }

    /// `(field, qubits)` factor dimensions.
    pub fn dims(&self) -> (usize, usize) {
        (self.fock_cutoff, self.dim_qubits())
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        build_space(self.qubit_count, fock_cutoff, self.basis)
    }
}

pub fn build_space(qubit_count: usize, fock_cutoff: usize, basis: Basis) -> Result<SpaceDescriptor> {
    if fock_cutoff < 2 {
        return Err(Error::InvalidDimension(format!(
            "fock cutoff must be at least 2, got {fock_cutoff}"
        )));
    }
    if basis == Basis::DickeSymmetric && qubit_count == 0 {
        return Err(Error::InvalidDimension(
            "the symmetric basis needs at least one qubit".into(),
        ));
    }
    if qubit_count > 16 {
        return Err(Error::InvalidDimension(format!("{qubit_count} qubits is beyond a dense representation")));
    }
    Ok(SpaceDescriptor { qubit_count, fock_cutoff, basis })
}

/// Qubit-side operators, either per site or collective.
#[derive(Debug, Clone)]
pub enum QubitOperators {
    Local { sigma_x: Vec<CMatrix>, sigma_z: Vec<CMatrix> },
    Collective { jx: CMatrix, jy: CMatrix, jz: CMatrix },
}

/// Elementary operators embedded in the full `field ⊗ qubits` space.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub space: SpaceDescriptor,
    pub annihilation: CMatrix,
    pub qubits: QubitOperators,
    pub field_identity: CMatrix,
    pub qubit_identity: CMatrix,
}

impl OperatorSet {
    pub fn number(&self) -> CMatrix {
        self.annihilation.adjoint() * &self.annihilation
    }

    pub fn creation(&self) -> CMatrix {
        self.annihilation.adjoint()
    }
}

/// Truncated bosonic annihilation operator on `n_max` Fock states.
pub fn annihilation(n_max: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n_max, n_max);
    for n in 1..n_max {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// Raising operator `J_+` of spin `twice_j / 2` in the `m = -j..j` ordering.
pub fn spin_raising(twice_j: usize) -> RMatrix {
    let dim = twice_j + 1;
    let j = twice_j as f64 / 2.0;
    let mut jp = RMatrix::zeros(dim, dim);
    for i in 0..twice_j {
        let m = -j + i as f64;
        jp[(i + 1, i)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
    }
    jp
}

/// `J_z` diagonal for spin `twice_j / 2`, ascending in `m`.
pub fn spin_z_diagonal(twice_j: usize) -> Vec<f64> {
    let j = twice_j as f64 / 2.0;
    (0..=twice_j).map(|i| -j + i as f64).collect()
}

/// `(J_x, J_y, J_z)` for spin `twice_j / 2`.
pub fn spin_matrices(twice_j: usize) -> (CMatrix, CMatrix, CMatrix) {
    let jp = spin_raising(twice_j).map(c);
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5);
    let jy = (&jp - &jm) * num_complex::Complex64::new(0.0, -0.5);
    let jz = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(
        spin_z_diagonal(twice_j).into_iter().map(c).collect(),
    ));
    (jx, jy, jz)
}

fn embed_site(op: &CMatrix, site: usize, qubit_count: usize) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for l in 0..qubit_count {
        let factor = if l == site { op.clone() } else { CMatrix::identity(2, 2) };
        out = kron(&out, &factor);
    }
    out
}

pub fn build_operators(space: &SpaceDescriptor) -> OperatorSet {
    let n_max = space.fock_cutoff;
    let dq = space.dim_qubits();
    let field_identity = CMatrix::identity(n_max, n_max);
    let qubit_identity = CMatrix::identity(dq, dq);
    let annihilation = kron(&annihilation(n_max), &qubit_identity);
    let qubits = match space.basis {
        Basis::FullTensor => {
            let (sx, sz) = (pauli_x(), pauli_z());
            let lift = |op: &CMatrix, l| kron(&field_identity, &embed_site(op, l, space.qubit_count));
            QubitOperators::Local {
                sigma_x: (0..space.qubit_count).map(|l| lift(&sx, l)).collect(),
                sigma_z: (0..space.qubit_count).map(|l| lift(&sz, l)).collect(),
            }
        }
        Basis::DickeSymmetric => {
            let (jx, jy, jz) = spin_matrices(space.qubit_count);
            QubitOperators::Collective {
                jx: kron(&field_identity, &jx),
                jy: kron(&field_identity, &jy),
                jz: kron(&field_identity, &jz),
            }
        }
    };
    OperatorSet { space: *space, annihilation, qubits, field_identity, qubit_identity }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Bipartite density matrix on `A ⊗ B`, `A` the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDimension("density matrix must be square".into()));
        }
        if dim_a * dim_b != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: dim_a * dim_b, found: matrix.nrows() });
        }
        Ok(Self { matrix, dim_a, dim_b })
    }

    /// `|ψ⟩⟨ψ|` for a (re)normalised `ψ`.
    pub fn pure(psi: &crate::linalg::CVector, dim_a: usize, dim_b: usize) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v = psi / c(norm);
        Self::new(&v * v.adjoint(), dim_a, dim_b)
    }

    pub fn product(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        Self::new(kron(a, b), a.nrows(), b.nrows())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn partial_trace(&self, keep: Subsystem) -> DensityMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let m = &self.matrix;
        match keep {
            Subsystem::A => {
                let r = CMatrix::from_fn(da, da, |i, k| (0..db).map(|b| m[(i * db + b, k * db + b)]).sum());
                DensityMatrix { matrix: r, dim_a: da, dim_b: 1 }
            }
            Subsystem::B => {
                let r = CMatrix::from_fn(db, db, |b, bb| (0..da).map(|a| m[(a * db + b, a * db + bb)]).sum());
                DensityMatrix { matrix: r, dim_a: 1, dim_b: db }
            }
        }
    }

    /// `(U_A ⊗ U_B) ρ (U_A ⊗ U_B)†`.
    pub fn local_rotation(&self, u_a: &CMatrix, u_b: &CMatrix) -> Result<Self> {
        if u_a.nrows() != self.dim_a || u_b.nrows() != self.dim_b {
            return Err(Error::DimensionMismatch { expected: self.dim_a * self.dim_b, found: u_a.nrows() * u_b.nrows() });
        }
        let u = kron(u_a, u_b);
        Self::new(&u * &self.matrix * u.adjoint(), self.dim_a, self.dim_b)
    }

    /// Regroup the same matrix under a different factorisation.
    pub fn with_dims(&self, dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::new(self.matrix.clone(), dim_a, dim_b)
    }

    /// Hermitian, positive semidefinite and unit trace to within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let dev = hermiticity_error(&self.matrix);
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let min = crate::linalg::eigvalsh(&self.matrix).into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!("trace {tr} differs from 1")));
        }
        Ok(())
    }
}

pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    if rho.dim_a * rho.dim_b != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim_a * rho.dim_b, found: rho.dim() });
    }
    Ok(rho.partial_trace(keep))
}

/// A mixture `Σ_k w_k |ψ_k⟩⟨ψ_k|` of orthonormal vectors on `A ⊗ B`.
///
/// Thermal states are stored this way: only the populated levels are kept,
/// which keeps discord evaluation independent of the Fock cutoff.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    /// One column per weight.
    pub vectors: CMatrix,
    pub dim_a: usize,
    pub dim_b: usize,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, vectors: CMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if vectors.ncols() != weights.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: vectors.ncols() });
        }
        if vectors.nrows() != dim_a * dim_b {
            return Err(Error::DimensionMismatch { expected: dim_a * dim_b, found: vectors.nrows() });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative ensemble weight {w}")));
        }
        Ok(Self { weights, vectors, dim_a, dim_b })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.vectors.nrows();
        let mut m = CMatrix::zeros(n, n);
        for (k, &w) in self.weights.iter().enumerate() {
            let v = self.vectors.column(k);
            m += (v * v.adjoint()) * c(w);
        }
        DensityMatrix { matrix: m, dim_a: self.dim_a, dim_b: self.dim_b }
    }

    /// Reduced state of the `B` factor without forming the full matrix.
    pub fn reduced_b(&self) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut r = CMatrix::zeros(db, db);
        for (k, &w) in self.weights.iter().enumerate() {
            let v = self.vectors.column(k);
            for b in 0..db {
                for bb in 0..db {
                    let s: num_complex::Complex64 = (0..da).map(|a| v[a * db + b] * v[a * db + bb].conj()).sum();
                    r[(b, bb)] += s * w;
                }
            }
        }
        r
    }

    /// Reduced state of the `A` factor without forming the full matrix.
    pub fn reduced_a(&self) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let mut r = CMatrix::zeros(da, da);
        for (k, &w) in self.weights.iter().enumerate() {
            let v = self.vectors.column(k);
            for a in 0..da {
                for aa in 0..da {
                    let s: num_complex::Complex64 = (0..db).map(|b| v[a * db + b] * v[aa * db + b].conj()).sum();
                    r[(a, aa)] += s * w;
                }
            }
        }
        r
    }
}

/// One angular-momentum sector of an `N`-qubit register.
#[derive(Debug, Clone)]
pub struct SpinSector {
    pub twice_j: usize,
    /// Each copy is a `2^N × (2j+1)` isometry whose column `i` is `|j, m=-j+i, α⟩`.
    pub copies: Vec<RMatrix>,
}

fn collective_raising(qubit_count: usize) -> RMatrix {
    // σ_+ = |e⟩⟨g| with |e⟩ = index 0.
    let dim = 1usize << qubit_count;
    let mut jp = RMatrix::zeros(dim, dim);
    for s in 0..dim {
        for l in 0..qubit_count {
            let bit = 1usize << (qubit_count - 1 - l);
            if s & bit != 0 {
                jp[(s & !bit, s)] += 1.0;
            }
        }
    }
    jp
}

fn excitations(state: usize, qubit_count: usize) -> usize {
    qubit_count - (state.count_ones() as usize)
}

/// Decomposition of the `N`-qubit register into `⊕_j (spin j) ⊗ C^{d_j}`,
/// sectors ordered by decreasing `j`. The first sector is the symmetric one.
pub fn collective_basis(qubit_count: usize) -> Result<Vec<SpinSector>> {
    if qubit_count == 0 {
        return Err(Error::InvalidDimension("collective basis needs at least one qubit".into()));
    }
    let dim = 1usize << qubit_count;
    let jp = collective_raising(qubit_count);
    let jm = jp.transpose();
    let mut sectors = Vec::new();
    let mut twice_j = qubit_count as isize;
    while twice_j >= 0 {
        let tj = twice_j as usize;
        let top_exc = (qubit_count + tj) / 2;
        let level: Vec<usize> = (0..dim).filter(|&s| excitations(s, qubit_count) == top_exc).collect();
        // Highest-weight vectors: kernel of J_+ restricted to m = j.
        let restricted = RMatrix::from_fn(dim, level.len(), |r, k| jp[(r, level[k])]);
        let gram = restricted.transpose() * &restricted;
        let (vals, vecs) = eigh_real(&gram)?;
        let mut copies = Vec::new();
        for (k, &v) in vals.iter().enumerate() {
            if v.abs() > 1e-9 {
                continue;
            }
            let mut iso = RMatrix::zeros(dim, tj + 1);
            for (idx, &s) in level.iter().enumerate() {
                iso[(s, tj)] = vecs[(idx, k)];
            }
            let j = tj as f64 / 2.0;
            for i in (1..=tj).rev() {
                let m = -j + i as f64;
                let norm = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
                let lowered = &jm * iso.column(i) / norm;
                iso.set_column(i - 1, &lowered);
            }
            copies.push(iso);
        }
        if !copies.is_empty() {
            sectors.push(SpinSector { twice_j: tj, copies });
        }
        twice_j -= 2;
    }
    Ok(sectors)
}

/// Isometry from the symmetric basis (`N + 1` states) into the full register.
pub fn symmetric_embedding(qubit_count: usize) -> Result<RMatrix> {
    Ok(collective_basis(qubit_count)?.swap_remove(0).copies.swap_remove(0))
}
