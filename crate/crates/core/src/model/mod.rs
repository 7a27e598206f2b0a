//! The multiqubit quantum Rabi (Dicke) Hamiltonian and its thermal states.
//!
//! `H = ω_r a†a + Σ_ℓ c·ω_{q,ℓ} σ_ℓ^z + Σ_ℓ g_ℓ σ_ℓ^x (a + a†)` with `ħ = 1`,
//! `c = 1/2` ([`QubitConvention::HalfSigmaZ`]) or `c = 1`. All energies are in
//! units of a reference frequency `ω`; temperatures are `τ = k_B T / ħω`.

mod eigensystem;

pub use eigensystem::{Eigensystem, Level, Sector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigh_real, eigvalsh_real, hermiticity_error, max_abs, to_complex, CMatrix, RMatrix};
use crate::statespace::{build_space, spin_raising, spin_z_diagonal, Basis, DensityMatrix, SpaceDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitConvention {
    /// `ω_q σ_z / 2`, the usual two-level splitting `ω_q`.
    #[default]
    HalfSigmaZ,
    /// `ω_q σ_z`, splitting `2ω_q`.
    FullSigmaZ,
}

impl QubitConvention {
    pub fn factor(self) -> f64 {
        match self {
            QubitConvention::HalfSigmaZ => 0.5,
            QubitConvention::FullSigmaZ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub space: SpaceDescriptor,
    pub omega_r: f64,
    pub omega_q: Vec<f64>,
    pub g: Vec<f64>,
    pub convention: QubitConvention,
}

impl ModelParams {
    /// Identical qubits, identical couplings.
    pub fn homogeneous(
        qubit_count: usize,
        fock_cutoff: usize,
        basis: Basis,
        omega_r: f64,
        omega_q: f64,
        g: f64,
    ) -> Result<Self> {
        let params = Self {
            space: build_space(qubit_count, fock_cutoff, basis)?,
            omega_r,
            omega_q: vec![omega_q; qubit_count],
            g: vec![g; qubit_count],
            convention: QubitConvention::default(),
        };
        params.validate()?;
        Ok(params)
    }

    /// Resonant `ω_r = ω_q = 1` system, the usual starting point.
    pub fn resonant(qubit_count: usize, fock_cutoff: usize, basis: Basis, g: f64) -> Result<Self> {
        Self::homogeneous(qubit_count, fock_cutoff, basis, 1.0, 1.0, g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.space.qubit_count;
        if self.omega_q.len() != n || self.g.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.omega_q.len().min(self.g.len()) });
        }
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega_r must be positive, got {}", self.omega_r)));
        }
        if let Some(w) = self.omega_q.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("qubit frequency must be positive, got {w}")));
        }
        if let Some(g) = self.g.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(format!("coupling must be non-negative, got {g}")));
        }
        if self.space.basis == Basis::DickeSymmetric && !self.is_homogeneous() {
            return Err(Error::BasisMismatch(
                "the symmetric basis requires identical qubit frequencies and couplings".into(),
            ));
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        let same = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
        same(&self.omega_q) && same(&self.g)
    }

    pub fn max_coupling(&self) -> f64 {
        self.g.iter().copied().fold(0.0, f64::max)
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        Ok(Self { space: self.space.with_cutoff(fock_cutoff)?, ..self.clone() })
    }

    pub fn with_basis(&self, basis: Basis) -> Result<Self> {
        let p = Self { space: build_space(self.space.qubit_count, self.space.fock_cutoff, basis)?, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        Self { g: vec![g; self.space.qubit_count], ..self.clone() }
    }

    /// All frequencies multiplied by `factor`; couplings untouched.
    pub fn with_frequency_scale(&self, factor: f64) -> Self {
        Self {
            omega_r: self.omega_r * factor,
            omega_q: self.omega_q.iter().map(|w| w * factor).collect(),
            ..self.clone()
        }
    }
}

/// Real Hamiltonian of one spin-`j` sector coupled to the field.
///
/// With identical qubits `Σσ_z = 2J_z` and `Σσ_x = 2J_x`, so each
/// angular-momentum sector sees `ω_r a†a + 2cω_q J_z + 2g J_x (a + a†)`.
pub(crate) fn collective_hamiltonian(
    twice_j: usize,
    fock_cutoff: usize,
    omega_r: f64,
    omega_q: f64,
    g: f64,
    convention: QubitConvention,
) -> RMatrix {
    let s = twice_j + 1;
    let dim = s * fock_cutoff;
    let jz = spin_z_diagonal(twice_j);
    let jp = spin_raising(twice_j);
    let jx = (&jp + jp.transpose()) * 0.5;
    let zeeman = 2.0 * convention.factor() * omega_q;
    let mut h = RMatrix::zeros(dim, dim);
    for n in 0..fock_cutoff {
        for i in 0..s {
            h[(n * s + i, n * s + i)] = omega_r * n as f64 + zeeman * jz[i];
        }
        if n + 1 < fock_cutoff {
            let amp = 2.0 * g * ((n + 1) as f64).sqrt();
            for i in 0..s {
                for k in 0..s {
                    let x = jx[(i, k)];
                    if x != 0.0 {
                        h[(n * s + i, (n + 1) * s + k)] += amp * x;
                        h[((n + 1) * s + k, n * s + i)] += amp * x;
                    }
                }
            }
        }
    }
    h
}

/// Real Hamiltonian in the representation named by `params.space`.
pub fn build_hamiltonian_real(params: &ModelParams) -> Result<RMatrix> {
    params.validate()?;
    let space = params.space;
    let n_max = space.fock_cutoff;
    let nq = space.qubit_count;
    match space.basis {
        Basis::DickeSymmetric => Ok(collective_hamiltonian(
            nq,
            n_max,
            params.omega_r,
            params.omega_q[0],
            params.g[0],
            params.convention,
        )),
        Basis::FullTensor => {
            let dq = space.dim_qubits();
            let cz = params.convention.factor();
            let mut h = RMatrix::zeros(space.dim_total(), space.dim_total());
            for n in 0..n_max {
                for s in 0..dq {
                    // bit = 0 means excited (σ_z = +1).
                    let zeeman: f64 = (0..nq)
                        .map(|l| {
                            let excited = s & (1 << (nq - 1 - l)) == 0;
                            cz * params.omega_q[l] * if excited { 1.0 } else { -1.0 }
                        })
                        .sum();
                    h[(n * dq + s, n * dq + s)] = params.omega_r * n as f64 + zeeman;
                    if n + 1 < n_max {
                        let amp = ((n + 1) as f64).sqrt();
                        for l in 0..nq {
                            let flipped = s ^ (1 << (nq - 1 - l));
                            let v = params.g[l] * amp;
                            h[(n * dq + s, (n + 1) * dq + flipped)] += v;
                            h[((n + 1) * dq + flipped, n * dq + s)] += v;
                        }
                    }
                }
            }
            Ok(h)
        }
    }
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<CMatrix> {
    Ok(to_complex(&build_hamiltonian_real(params)?))
}

/// Diagonal of `exp(-iπ[Σ(σ_z+1)/2 + a†a])`, i.e. `(-1)^(photons + excitations)`.
pub fn parity_signs(space: &SpaceDescriptor) -> Vec<i8> {
    let dq = space.dim_qubits();
    let nq = space.qubit_count;
    let mut out = Vec::with_capacity(space.dim_total());
    for n in 0..space.fock_cutoff {
        for s in 0..dq {
            let excitations = match space.basis {
                Basis::FullTensor => nq - s.count_ones() as usize,
                Basis::DickeSymmetric => s,
            };
            out.push(if (n + excitations) % 2 == 0 { 1 } else { -1 });
        }
    }
    out
}

pub fn parity_operator(space: &SpaceDescriptor) -> CMatrix {
    let signs = parity_signs(space);
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        signs.len(),
        signs.iter().map(|&s| crate::linalg::c(s as f64)),
    ))
}

fn split_by_sign(signs: &[i8]) -> [Vec<usize>; 2] {
    let even = signs.iter().enumerate().filter(|(_, &s)| s > 0).map(|(i, _)| i).collect();
    let odd = signs.iter().enumerate().filter(|(_, &s)| s < 0).map(|(i, _)| i).collect();
    [even, odd]
}

/// Diagonalise a real symmetric matrix that commutes with a diagonal `±1`
/// symmetry by solving the two symmetry blocks separately.
pub(crate) fn blocked_eigh(h: &RMatrix, signs: &[i8]) -> Result<(Vec<f64>, RMatrix)> {
    let n = h.nrows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    for (b, idx) in split_by_sign(signs).into_iter().enumerate() {
        let sub = RMatrix::from_fn(idx.len(), idx.len(), |i, k| h[(idx[i], idx[k])]);
        let (vals, vecs) = eigh_real(&sub)?;
        for (k, v) in vals.iter().enumerate() {
            pairs.push((*v, b, k));
        }
        blocks.push((idx, vecs));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut states = RMatrix::zeros(n, n);
    for (col, &(_, b, k)) in pairs.iter().enumerate() {
        let (idx, vecs) = &blocks[b];
        for (i, &row) in idx.iter().enumerate() {
            states[(row, col)] = vecs[(i, k)];
        }
    }
    Ok((pairs.into_iter().map(|p| p.0).collect(), states))
}

pub(crate) fn blocked_eigvals(h: &RMatrix, signs: &[i8]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(h.nrows());
    for idx in split_by_sign(signs) {
        let sub = RMatrix::from_fn(idx.len(), idx.len(), |i, k| h[(idx[i], idx[k])]);
        out.extend(eigvalsh_real(&sub)?);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Ascending eigenvalues with column eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub states: CMatrix,
    pub params: Option<ModelParams>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `(field, qubits)` factor dimensions, or `(dim, 1)` without a model.
    pub fn dims(&self) -> (usize, usize) {
        self.params.as_ref().map(|p| p.space.dims()).unwrap_or((self.len(), 1))
    }
}

pub fn eigendecompose(h: &CMatrix) -> Result<Spectrum> {
    if !h.is_square() {
        return Err(Error::InvalidDimension("Hamiltonian must be square".into()));
    }
    let dev = hermiticity_error(h);
    if dev > 1e-10 * max_abs(h).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (energies, states) = eigh(h)?;
    Ok(Spectrum { energies, states, params: None })
}

/// Parity-blocked diagonalisation of the model Hamiltonian.
pub fn diagonalize(params: &ModelParams) -> Result<Spectrum> {
    let h = build_hamiltonian_real(params)?;
    let (energies, states) = blocked_eigh(&h, &parity_signs(&params.space))?;
    Ok(Spectrum { energies, states: to_complex(&states), params: Some(params.clone()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    /// `τ = k_B T / ħω`.
    pub temperature: f64,
    /// Keep only the lowest `m` levels.
    pub level_cutoff: Option<usize>,
    /// Levels within this energy of the ground level share the `τ = 0` state.
    pub degeneracy_tol: f64,
}

impl ThermalConfig {
    pub fn new(temperature: f64) -> Self {
        Self { temperature, level_cutoff: None, degeneracy_tol: 1e-9 }
    }

    pub fn with_level_cutoff(self, m: usize) -> Self {
        Self { level_cutoff: Some(m), ..self }
    }
}

/// Boltzmann populations of ascending `energies`.
pub fn thermal_populations(energies: &[f64], cfg: &ThermalConfig) -> Result<Vec<f64>> {
    let tau = cfg.temperature;
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeTemperature(tau));
    }
    if energies.is_empty() {
        return Err(Error::InvalidDimension("empty spectrum".into()));
    }
    let keep = match cfg.level_cutoff {
        Some(m) if m == 0 || m > energies.len() => {
            return Err(Error::InvalidParameter(format!(
                "level cutoff {m} outside 1..={}",
                energies.len()
            )))
        }
        Some(m) => m,
        None => energies.len(),
    };
    let e0 = energies[0];
    let mut p: Vec<f64> = energies
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            if k >= keep {
                0.0
            } else if tau == 0.0 {
                if e - e0 <= cfg.degeneracy_tol { 1.0 } else { 0.0 }
            } else {
                (-(e - e0) / tau).exp()
            }
        })
        .collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

pub fn thermal_state(spec: &Spectrum, cfg: &ThermalConfig) -> Result<DensityMatrix> {
    let p = thermal_populations(&spec.energies, cfg)?;
    let n = spec.len();
    let mut weighted = spec.states.clone();
    for (k, pk) in p.iter().enumerate() {
        let mut col = weighted.column_mut(k);
        col *= crate::linalg::c(*pk);
    }
    let rho = weighted * spec.states.adjoint();
    let (da, db) = spec.dims();
    let rho = (&rho + rho.adjoint()) * crate::linalg::c(0.5);
    debug_assert_eq!(rho.nrows(), n);
    DensityMatrix::new(rho, da, db)
}

/// Starting cutoff `ceil(α² + 10√(α²+1) + 20)` with `α = N·max(g)/ω_r`:
/// mean photon number of the displaced vacuum plus ten standard deviations.
pub fn initial_cutoff(params: &ModelParams) -> usize {
    let alpha = params.space.qubit_count as f64 * params.max_coupling() / params.omega_r;
    let a2 = alpha * alpha;
    (a2 + 10.0 * (a2 + 1.0).sqrt() + 20.0).ceil() as usize
}

const MAX_DOUBLINGS: usize = 4;

/// Smallest cutoff in `n₀, 2n₀, 4n₀, …` whose lowest `n_levels` energies move
/// by less than `tol` when the cutoff is doubled.
pub fn converge_cutoff(params: &ModelParams, n_levels: usize, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if n_levels == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    params.validate()?;
    let mut cutoff = initial_cutoff(params);
    let mut current = Eigensystem::lowest_energies(&params.with_cutoff(cutoff)?, n_levels)?;
    if params.max_coupling() == 0.0 {
        return Ok(cutoff);
    }
    for _ in 0..MAX_DOUBLINGS {
        let next = Eigensystem::lowest_energies(&params.with_cutoff(2 * cutoff)?, n_levels)?;
        let shift = current.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if shift < tol {
            return Ok(cutoff);
        }
        cutoff *= 2;
        current = next;
    }
    Err(Error::NonConvergence(format!(
        "lowest {n_levels} levels not stable to {tol:e} after {MAX_DOUBLINGS} doublings (cutoff {cutoff})"
    )))
}

/// How a Fock cutoff is chosen for a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffPolicy {
    Fixed(usize),
    /// [`initial_cutoff`] without verification.
    Initial,
    /// [`converge_cutoff`].
    Converged { n_levels: usize, tol: f64 },
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy::Converged { n_levels: 5, tol: 1e-8 }
    }
}

impl CutoffPolicy {
    pub fn resolve(&self, params: &ModelParams) -> Result<usize> {
        match *self {
            CutoffPolicy::Fixed(n) => Ok(n),
            CutoffPolicy::Initial => Ok(initial_cutoff(params)),
            CutoffPolicy::Converged { n_levels, tol } => converge_cutoff(params, n_levels, tol),
        }
    }
}
