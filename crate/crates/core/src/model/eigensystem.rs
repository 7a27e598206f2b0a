use nalgebra::DVector;

use super::{blocked_eigh, blocked_eigvals, build_hamiltonian_real, collective_hamiltonian, parity_signs};
use super::{thermal_populations, ModelParams, Spectrum, ThermalConfig};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, RMatrix};
use crate::statespace::{collective_basis, Basis, DensityMatrix, Ensemble};

/// One symmetry block of the Hamiltonian.
#[derive(Debug, Clone)]
pub struct Sector {
    /// `2j` for an angular-momentum sector, `None` for an unreduced problem.
    pub twice_j: Option<usize>,
    /// Isometries from the sector's qubit factor into the model's qubit space,
    /// one per degenerate copy of the sector.
    pub embeddings: Vec<RMatrix>,
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in `field ⊗ sector-qubits`.
    pub states: RMatrix,
}

impl Sector {
    fn qubit_dim(&self) -> usize {
        self.embeddings[0].ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub sector: usize,
    pub index: usize,
    pub copy: usize,
}

/// Full spectrum of a model, organised by symmetry sector.
///
/// For identical qubits the register splits into `⊕_j (spin j) ⊗ C^{d_j}`
/// and each `j` is diagonalised once; every eigenvalue then appears `d_j`
/// times. Other models are handled as a single sector.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub params: ModelParams,
    pub sectors: Vec<Sector>,
    /// Every level including multiplicities, ascending in energy.
    pub levels: Vec<Level>,
}

struct SectorProblem {
    twice_j: Option<usize>,
    hamiltonian: RMatrix,
    signs: Vec<i8>,
    embeddings: Vec<RMatrix>,
}

fn sector_problems(params: &ModelParams) -> Result<Vec<SectorProblem>> {
    params.validate()?;
    let space = params.space;
    let n_max = space.fock_cutoff;
    let collective = |tj: usize, embeddings: Vec<RMatrix>| {
        let s = tj + 1;
        let signs = (0..n_max * s).map(|k| if (k / s + k % s) % 2 == 0 { 1 } else { -1 }).collect();
        SectorProblem {
            twice_j: Some(tj),
            hamiltonian: collective_hamiltonian(tj, n_max, params.omega_r, params.omega_q[0], params.g[0], params.convention),
            signs,
            embeddings,
        }
    };
    match space.basis {
        Basis::DickeSymmetric => {
            let nq = space.qubit_count;
            Ok(vec![collective(nq, vec![RMatrix::identity(nq + 1, nq + 1)])])
        }
        Basis::FullTensor if space.qubit_count > 0 && params.is_homogeneous() => Ok(collective_basis(space.qubit_count)?
            .into_iter()
            .map(|s| collective(s.twice_j, s.copies))
            .collect()),
        Basis::FullTensor => {
            let dq = space.dim_qubits();
            Ok(vec![SectorProblem {
                twice_j: None,
                hamiltonian: build_hamiltonian_real(params)?,
                signs: parity_signs(&space),
                embeddings: vec![RMatrix::identity(dq, dq)],
            }])
        }
    }
}

impl Eigensystem {
    pub fn solve(params: &ModelParams) -> Result<Self> {
        let mut sectors = Vec::new();
        for problem in sector_problems(params)? {
            let (energies, states) = blocked_eigh(&problem.hamiltonian, &problem.signs)?;
            sectors.push(Sector { twice_j: problem.twice_j, embeddings: problem.embeddings, energies, states });
        }
        let mut levels = Vec::new();
        for (si, s) in sectors.iter().enumerate() {
            for copy in 0..s.embeddings.len() {
                for (index, &energy) in s.energies.iter().enumerate() {
                    levels.push(Level { energy, sector: si, index, copy });
                }
            }
        }
        levels.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then(a.sector.cmp(&b.sector))
                .then(a.index.cmp(&b.index))
                .then(a.copy.cmp(&b.copy))
        });
        Ok(Self { params: params.clone(), sectors, levels })
    }

    /// Lowest `n` eigenvalues (with multiplicity) without eigenvectors.
    pub fn lowest_energies(params: &ModelParams, n: usize) -> Result<Vec<f64>> {
        let mut all = Vec::new();
        for problem in sector_problems(params)? {
            let vals = blocked_eigvals(&problem.hamiltonian, &problem.signs)?;
            for _ in 0..problem.embeddings.len() {
                all.extend(vals.iter().take(n));
            }
        }
        all.sort_by(f64::total_cmp);
        all.truncate(n);
        Ok(all)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.params.space.dims()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].energy
    }

    pub fn populations(&self, cfg: &ThermalConfig) -> Result<Vec<f64>> {
        thermal_populations(&self.energies(), cfg)
    }

    /// Eigenvector of `level` in the model's `field ⊗ qubits` space.
    pub fn level_vector(&self, level: &Level) -> DVector<f64> {
        let sector = &self.sectors[level.sector];
        let emb = &sector.embeddings[level.copy];
        let s = sector.qubit_dim();
        let (n_max, dq) = self.dims();
        let col = sector.states.column(level.index);
        let mut out = DVector::zeros(n_max * dq);
        for n in 0..n_max {
            let local = col.rows(n * s, s);
            let mut block = out.rows_mut(n * dq, dq);
            block.gemv(1.0, emb, &local, 0.0);
        }
        out
    }

    /// Indices of levels whose populations are kept after discarding the
    /// smallest ones with total weight at most `tail_tol`.
    fn kept_levels(populations: &[f64], tail_tol: f64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..populations.len()).collect();
        order.sort_by(|&a, &b| populations[a].total_cmp(&populations[b]).then(b.cmp(&a)));
        let mut dropped = 0.0;
        let mut drop = vec![false; populations.len()];
        for &k in &order {
            if dropped + populations[k] > tail_tol {
                break;
            }
            dropped += populations[k];
            drop[k] = true;
        }
        (0..populations.len()).filter(|&k| !drop[k]).collect()
    }

    fn check_populations(&self, populations: &[f64]) -> Result<()> {
        if populations.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: populations.len() });
        }
        Ok(())
    }

    /// `Σ_k p_k |ε_k⟩⟨ε_k|` over this system's eigenvectors (energy order),
    /// dropping a tail of total weight at most `tail_tol` and renormalising.
    pub fn ensemble(&self, populations: &[f64], tail_tol: f64) -> Result<Ensemble> {
        self.check_populations(populations)?;
        let keep = Self::kept_levels(populations, tail_tol);
        let total: f64 = keep.iter().map(|&k| populations[k]).sum();
        let (n_max, dq) = self.dims();
        let mut vectors = CMatrix::zeros(n_max * dq, keep.len());
        for (col, &k) in keep.iter().enumerate() {
            let v = self.level_vector(&self.levels[k]);
            vectors.set_column(col, &v.map(c));
        }
        let weights = keep.iter().map(|&k| populations[k] / total).collect();
        Ensemble::new(weights, vectors, n_max, dq)
    }

    pub fn thermal_ensemble(&self, cfg: &ThermalConfig, tail_tol: f64) -> Result<Ensemble> {
        self.ensemble(&self.populations(cfg)?, tail_tol)
    }

    /// Qubit state `Tr_field ρ` for `ρ = Σ_k p_k |ε_k⟩⟨ε_k|`.
    pub fn qubit_marginal(&self, populations: &[f64], tail_tol: f64) -> Result<DensityMatrix> {
        self.check_populations(populations)?;
        let keep = Self::kept_levels(populations, tail_tol);
        let total: f64 = keep.iter().map(|&k| populations[k]).sum();
        let (n_max, dq) = self.dims();
        // Accumulate per (sector, copy) in the small sector basis, then embed.
        let mut blocks: Vec<Vec<Option<RMatrix>>> =
            self.sectors.iter().map(|s| vec![None; s.embeddings.len()]).collect();
        for &k in &keep {
            let level = &self.levels[k];
            let sector = &self.sectors[level.sector];
            let s = sector.qubit_dim();
            let coeffs = RMatrix::from_fn(n_max, s, |n, i| sector.states[(n * s + i, level.index)]);
            let r = coeffs.transpose() * &coeffs * (populations[k] / total);
            let slot = &mut blocks[level.sector][level.copy];
            match slot {
                Some(acc) => *acc += r,
                None => *slot = Some(r),
            }
        }
        let mut out = RMatrix::zeros(dq, dq);
        for (si, sector) in self.sectors.iter().enumerate() {
            for (copy, block) in blocks[si].iter().enumerate() {
                if let Some(r) = block {
                    let e = &sector.embeddings[copy];
                    out += e * r * e.transpose();
                }
            }
        }
        DensityMatrix::new(out.map(c), 1, dq)
    }

    /// Dense `Spectrum` in the model's full space; intended for small systems.
    pub fn to_spectrum(&self) -> Spectrum {
        let (n_max, dq) = self.dims();
        let mut states = CMatrix::zeros(n_max * dq, self.len());
        for (k, level) in self.levels.iter().enumerate() {
            states.set_column(k, &self.level_vector(level).map(c));
        }
        Spectrum { energies: self.energies(), states, params: Some(self.params.clone()) }
    }

    /// Adjacent level pairs closer than `tol` that belong to different
    /// eigenvectors of the sector problem (exact copy degeneracies excluded).
    pub fn near_degeneracies(&self, tol: f64) -> Vec<usize> {
        self.levels
            .windows(2)
            .enumerate()
            .filter(|(_, w)| {
                w[1].energy - w[0].energy < tol && (w[0].sector, w[0].index) != (w[1].sector, w[1].index)
            })
            .map(|(k, _)| k)
            .collect()
    }
}
