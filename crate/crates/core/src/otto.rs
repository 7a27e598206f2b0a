//! Four-stroke quantum Otto cycle with the multiqubit Rabi working substance.
//!
//! Stage 1 is the hot thermal state of `H_h`, stage 2 carries its populations
//! onto the eigenstates of `H_c` in energy order, stage 3 is the cold thermal
//! state of `H_c`, stage 4 carries the cold populations back onto `H_h`.
//! Heats and work only need the two spectra; stage states are built on
//! demand for the discord calculation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::quantum_discord_ensemble;
use crate::error::{Error, Result};
use crate::model::{CutoffPolicy, Eigensystem, ModelParams, ThermalConfig};
use crate::optimizer::{derive_seed, OptimizerConfig};
use crate::statespace::{Basis, DensityMatrix, Ensemble};
use crate::units::reference_tau;

/// Which stages get a discord and in which basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageDiscordConfig {
    /// Stage numbers `1..=4`.
    pub stages: Vec<usize>,
    /// Discords are skipped (NaN) above this qubit count.
    pub max_qubits: usize,
    /// Basis of the stage states for `N >= 2`.
    pub basis: Basis,
    /// Population tail dropped from the stage ensembles.
    pub tail_tol: f64,
}

impl Default for StageDiscordConfig {
    fn default() -> Self {
        Self { stages: vec![1, 2, 3, 4], max_qubits: 3, basis: Basis::DickeSymmetric, tail_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    /// Frequencies in units of the reference `ω`; the basis here is used
    /// for the heat and work bookkeeping.
    pub base_params: ModelParams,
    pub omega_h: f64,
    pub omega_c: f64,
    pub tau_h: f64,
    pub tau_c: f64,
    pub g_abs: f64,
    pub cutoff: CutoffPolicy,
    pub discord: StageDiscordConfig,
    /// Spacing below which two levels count as crossing.
    pub crossing_tol: f64,
}

impl CycleSpec {
    /// `ω_h = 2ω`, `ω_c = ω`, `T_c = 19 mK` at 8 GHz, `T_h = 9 T_c`, full register.
    pub fn standard(qubit_count: usize, g_abs: f64) -> Result<Self> {
        let tau_c = reference_tau();
        Ok(Self {
            base_params: ModelParams::resonant(qubit_count, 2, Basis::FullTensor, g_abs)?,
            omega_h: 2.0,
            omega_c: 1.0,
            tau_h: 9.0 * tau_c,
            tau_c,
            g_abs,
            cutoff: CutoffPolicy::default(),
            discord: StageDiscordConfig::default(),
            crossing_tol: 1e-9,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.base_params.space.qubit_count
    }

    pub fn with_coupling(&self, g_abs: f64) -> Self {
        Self { g_abs, ..self.clone() }
    }

    pub fn with_qubits(&self, qubit_count: usize) -> Result<Self> {
        let b = &self.base_params;
        let base = ModelParams::homogeneous(qubit_count, 2, b.space.basis, b.omega_r, b.omega_q.first().copied().unwrap_or(b.omega_r), self.g_abs)?;
        Ok(Self { base_params: ModelParams { convention: b.convention, ..base }, ..self.clone() })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c > 0.0 && self.omega_h >= self.omega_c && self.omega_h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need omega_h >= omega_c > 0, got {} and {}",
                self.omega_h, self.omega_c
            )));
        }
        if self.tau_c < 0.0 {
            return Err(Error::NegativeTemperature(self.tau_c));
        }
        if !(self.tau_h >= self.tau_c && self.tau_h.is_finite()) {
            return Err(Error::InvalidParameter(format!("need tau_h >= tau_c, got {} and {}", self.tau_h, self.tau_c)));
        }
        if !(self.g_abs >= 0.0 && self.g_abs.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling must be non-negative, got {}", self.g_abs)));
        }
        if let Some(s) = self.discord.stages.iter().find(|s| !(1..=4).contains(*s)) {
            return Err(Error::InvalidParameter(format!("stage {s} is not one of 1..4")));
        }
        self.base_params.validate()
    }

    /// Hot and cold parameters in `basis` at a shared cutoff.
    fn hamiltonians(&self, basis: Basis) -> Result<(ModelParams, ModelParams)> {
        let base = self.base_params.with_coupling(self.g_abs).with_basis(basis)?;
        let hot = base.with_frequency_scale(self.omega_h);
        let cold = base.with_frequency_scale(self.omega_c);
        let cutoff = self.cutoff.resolve(&hot)?.max(self.cutoff.resolve(&cold)?);
        Ok((hot.with_cutoff(cutoff)?, cold.with_cutoff(cutoff)?))
    }
}

#[derive(Debug, Clone)]
pub struct OttoRecord {
    pub qubit_count: usize,
    pub g_abs: f64,
    pub q_hot: f64,
    pub q_cold: f64,
    pub work: f64,
    /// NaN for stages that were not computed.
    pub discord_stage: [f64; 4],
    pub delta_q_14: f64,
    pub delta_q_23: f64,
    /// Stage states in the discord basis, when discords were requested.
    pub stages: Option<[Ensemble; 4]>,
    pub work_basis: Basis,
    pub discord_basis: Option<Basis>,
    pub cutoff: usize,
    pub warnings: Vec<String>,
}

impl OttoRecord {
    /// Dense stage state `k` (1-based).
    pub fn rho_stage(&self, k: usize) -> Option<DensityMatrix> {
        self.stages.as_ref().and_then(|s| s.get(k.wrapping_sub(1))).map(Ensemble::to_density)
    }
}

/// Heats and work from two ascending spectra paired by index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heats {
    pub q_hot: f64,
    pub q_cold: f64,
    pub work: f64,
}

pub fn cycle_heats(e_hot: &[f64], e_cold: &[f64], p_hot: &[f64], p_cold: &[f64]) -> Heats {
    let mut q_hot = 0.0;
    let mut q_cold = 0.0;
    for n in 0..e_hot.len() {
        let dp = p_hot[n] - p_cold[n];
        q_hot += e_hot[n] * dp;
        q_cold -= e_cold[n] * dp;
    }
    Heats { q_hot, q_cold, work: q_hot + q_cold }
}

/// Near-degenerate levels of `target` that receive different populations.
fn ambiguous_crossings(target: &Eigensystem, populations: &[f64], tol: f64) -> usize {
    target
        .near_degeneracies(tol)
        .into_iter()
        .filter(|&k| (populations[k] - populations[k + 1]).abs() > 1e-12 * populations[k].max(populations[k + 1]))
        .count()
}

/// Hot and cold eigensystems with their thermal populations.
pub struct CyclePair {
    pub hot: Eigensystem,
    pub cold: Eigensystem,
    pub p_hot: Vec<f64>,
    pub p_cold: Vec<f64>,
}

impl CyclePair {
    pub fn solve(spec: &CycleSpec, basis: Basis) -> Result<Self> {
        let (hot, cold) = spec.hamiltonians(basis)?;
        let hot = Eigensystem::solve(&hot)?;
        let cold = Eigensystem::solve(&cold)?;
        let p_hot = hot.populations(&ThermalConfig::new(spec.tau_h))?;
        let p_cold = cold.populations(&ThermalConfig::new(spec.tau_c))?;
        Ok(Self { hot, cold, p_hot, p_cold })
    }

    pub fn heats(&self) -> Heats {
        cycle_heats(&self.hot.energies(), &self.cold.energies(), &self.p_hot, &self.p_cold)
    }

    pub fn cutoff(&self) -> usize {
        self.hot.params.space.fock_cutoff
    }

    /// Number of near-degenerate level pairs whose ordering changes the stage states.
    pub fn ambiguous_crossings(&self, tol: f64) -> usize {
        ambiguous_crossings(&self.cold, &self.p_hot, tol) + ambiguous_crossings(&self.hot, &self.p_cold, tol)
    }

    /// Stages 1 to 4 as low-rank mixtures.
    pub fn stage_states(&self, tail_tol: f64) -> Result<[Ensemble; 4]> {
        Ok([
            self.hot.ensemble(&self.p_hot, tail_tol)?,
            self.cold.ensemble(&self.p_hot, tail_tol)?,
            self.cold.ensemble(&self.p_cold, tail_tol)?,
            self.hot.ensemble(&self.p_cold, tail_tol)?,
        ])
    }
}

pub fn run_cycle(spec: &CycleSpec, opt: &OptimizerConfig) -> Result<OttoRecord> {
    spec.validate()?;
    let n = spec.qubit_count();
    let work_basis = spec.base_params.space.basis;
    let pair = CyclePair::solve(spec, work_basis)?;
    let heats = pair.heats();
    let mut warnings = Vec::new();
    let crossings = pair.ambiguous_crossings(spec.crossing_tol);
    if crossings > 0 {
        warnings.push(format!("{crossings} level crossings make the adiabatic pairing ambiguous"));
    }
    let mut discord_stage = [f64::NAN; 4];
    let mut stages = None;
    let mut discord_basis = None;

    let wanted = !spec.discord.stages.is_empty() && n >= 1 && n <= spec.discord.max_qubits;
    if wanted {
        let basis = if n >= 2 && spec.base_params.is_homogeneous() { spec.discord.basis } else { Basis::FullTensor };
        let states = if basis == work_basis {
            pair.stage_states(spec.discord.tail_tol)?
        } else {
            let reduced = CyclePair::solve(spec, basis)?;
            let crossings = reduced.ambiguous_crossings(spec.crossing_tol);
            if crossings > 0 {
                warnings.push(format!("{crossings} level crossings in the {basis} stage states"));
            }
            reduced.stage_states(spec.discord.tail_tol)?
        };
        let results: Vec<(usize, Result<crate::discord::DiscordResult>)> = spec
            .discord
            .stages
            .par_iter()
            .map(|&s| (s, quantum_discord_ensemble(&states[s - 1], &opt.with_seed(derive_seed(opt.master_seed, s as u64)))))
            .collect();
        for (s, r) in results {
            match r {
                Ok(q) => {
                    discord_stage[s - 1] = q.value;
                    if let Some(w) = q.warning {
                        warnings.push(format!("stage {s}: {w}"));
                    }
                }
                Err(e) => warnings.push(format!("stage {s}: {e}")),
            }
        }
        stages = Some(states);
        discord_basis = Some(basis);
    }

    Ok(OttoRecord {
        qubit_count: n,
        g_abs: spec.g_abs,
        q_hot: heats.q_hot,
        q_cold: heats.q_cold,
        work: heats.work,
        discord_stage,
        delta_q_14: discord_stage[0] - discord_stage[3],
        delta_q_23: discord_stage[1] - discord_stage[2],
        stages,
        work_basis: spec.base_params.space.basis,
        discord_basis,
        cutoff: pair.cutoff(),
        warnings,
    })
}

/// One `(N, g)` point of a work scan.
#[derive(Debug, Clone)]
pub struct WorkPoint {
    pub qubit_count: usize,
    pub g_abs: f64,
    pub seed: u64,
    pub record: std::result::Result<OttoRecord, Error>,
}

/// Cycles over every `(N, g)` pair, in `N`-major order. Stage states are
/// dropped from the returned records.
pub fn work_scan(template: &CycleSpec, g_grid: &[f64], qubit_counts: &[usize], opt: &OptimizerConfig) -> Result<Vec<WorkPoint>> {
    if g_grid.is_empty() {
        return Err(Error::InvalidParameter("empty coupling grid".into()));
    }
    if g_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("coupling grid must be strictly increasing".into()));
    }
    opt.validate()?;
    let tasks: Vec<(usize, usize, f64)> = qubit_counts
        .iter()
        .enumerate()
        .flat_map(|(ni, &n)| g_grid.iter().enumerate().map(move |(gi, &g)| (ni * g_grid.len() + gi, n, g)))
        .collect();
    let specs: Vec<CycleSpec> = qubit_counts.iter().map(|&n| template.with_qubits(n)).collect::<Result<_>>()?;
    Ok(tasks
        .par_iter()
        .map(|&(index, n, g)| {
            let seed = derive_seed(opt.master_seed, index as u64);
            let ni = index / g_grid.len();
            let record = run_cycle(&specs[ni].with_coupling(g), &opt.with_seed(seed)).map(|mut r| {
                r.stages = None;
                r
            });
            WorkPoint { qubit_count: n, g_abs: g, seed, record }
        })
        .collect())
}
