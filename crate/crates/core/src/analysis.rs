//! Coupling scans of thermal discord, extremum location and power-law fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::{quantum_discord, quantum_discord_ensemble, DiscordResult};
use crate::error::{Error, Result};
use crate::linalg::to_complex;
use crate::model::{CutoffPolicy, Eigensystem, ModelParams, ThermalConfig};
use crate::optimizer::{derive_seed, OptimizerConfig};
use crate::statespace::{symmetric_embedding, Basis, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Field against all qubits, measuring the qubits.
    FieldVsQubits,
    /// Field traced out; `N-1` qubits against the last one, measuring the last.
    OneVsRest,
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Partition::FieldVsQubits => "field_vs_qubits",
            Partition::OneVsRest => "one_vs_rest",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub partition: Partition,
    pub cutoff: CutoffPolicy,
    /// Thermal population tail dropped before the discord.
    pub tail_tol: f64,
    pub level_cutoff: Option<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { partition: Partition::FieldVsQubits, cutoff: CutoffPolicy::default(), tail_tol: 1e-10, level_cutoff: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub g_over_omega: f64,
    pub discord: f64,
    pub cutoff: usize,
    pub seed: u64,
    pub optimal_angles: Vec<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub qubit_count: usize,
    pub tau: f64,
    pub basis: Basis,
    pub partition: Partition,
    pub master_seed: u64,
    pub g_over_omega: Vec<f64>,
    pub discord: Vec<f64>,
    pub points: Vec<ScanPoint>,
}

impl ScanRecord {
    pub fn locate(&self, kind: ExtremumKind) -> Result<Extremum> {
        locate_extremum(&self.g_over_omega, &self.discord, kind)
    }
}

/// `n` points spaced evenly in `log x` from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::InvalidParameter(format!("bad log grid [{lo}, {hi}] with {n} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || n < 2 {
        return Err(Error::InvalidParameter(format!("bad grid [{lo}, {hi}] with {n} points")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// The default discord grid: 60 log-spaced points on `[0.01, 2]`.
pub fn default_discord_grid() -> Vec<f64> {
    log_grid(0.01, 2.0, 60).expect("valid constants")
}

fn check_grid(g_grid: &[f64]) -> Result<()> {
    if g_grid.is_empty() {
        return Err(Error::InvalidParameter("empty coupling grid".into()));
    }
    if g_grid.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter("couplings must be finite and non-negative".into()));
    }
    if g_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("coupling grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `Tr_field ρ` regrouped as `(N-1 qubits) ⊗ (last qubit)` in the full register.
pub fn one_vs_rest_state(system: &Eigensystem, populations: &[f64], tail_tol: f64) -> Result<DensityMatrix> {
    let n = system.params.space.qubit_count;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("the one-vs-rest partition needs N >= 2, got {n}")));
    }
    let marginal = system.qubit_marginal(populations, tail_tol)?;
    let matrix = match system.params.space.basis {
        Basis::FullTensor => marginal.matrix,
        Basis::DickeSymmetric => {
            let e = to_complex(&symmetric_embedding(n)?);
            &e * marginal.matrix * e.transpose()
        }
    };
    DensityMatrix::new(matrix, 1 << (n - 1), 2)
}

fn point_discord(
    system: &Eigensystem,
    tau: f64,
    cfg: &ScanConfig,
    opt: &OptimizerConfig,
) -> Result<DiscordResult> {
    let mut thermal = ThermalConfig::new(tau);
    thermal.level_cutoff = cfg.level_cutoff;
    let populations = system.populations(&thermal)?;
    match cfg.partition {
        Partition::FieldVsQubits => quantum_discord_ensemble(&system.ensemble(&populations, cfg.tail_tol)?, opt),
        Partition::OneVsRest => quantum_discord(&one_vs_rest_state(system, &populations, cfg.tail_tol)?, opt),
    }
}

/// Discord scans at several temperatures sharing one diagonalisation per
/// coupling. The optimiser seed of grid point `i` is derived from
/// `(opt.master_seed, i)`.
pub fn discord_scan_multi(
    template: &ModelParams,
    taus: &[f64],
    g_grid: &[f64],
    cfg: &ScanConfig,
    opt: &OptimizerConfig,
) -> Result<Vec<ScanRecord>> {
    check_grid(g_grid)?;
    template.validate()?;
    opt.validate()?;
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTemperature(*t));
    }
    let n = template.space.qubit_count;
    match cfg.partition {
        Partition::OneVsRest if n < 2 => {
            return Err(Error::InvalidParameter(format!("the one-vs-rest partition needs N >= 2, got {n}")));
        }
        Partition::FieldVsQubits if n < 1 => {
            return Err(Error::InvalidParameter("the field-vs-qubits partition needs N >= 1".into()));
        }
        _ => {}
    }

    let columns: Vec<Vec<ScanPoint>> = g_grid
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let seed = derive_seed(opt.master_seed, i as u64);
            let point_opt = opt.with_seed(seed);
            let failed = |cutoff: usize, e: Error| ScanPoint {
                g_over_omega: g,
                discord: f64::NAN,
                cutoff,
                seed,
                optimal_angles: Vec::new(),
                warning: Some(e.to_string()),
            };
            let params = template.with_coupling(g);
            let system = cfg
                .cutoff
                .resolve(&params)
                .and_then(|cutoff| Eigensystem::solve(&params.with_cutoff(cutoff)?));
            let system = match system {
                Ok(s) => s,
                Err(e) => return taus.iter().map(|_| failed(0, e.clone())).collect(),
            };
            let cutoff = system.params.space.fock_cutoff;
            taus.iter()
                .map(|&tau| match point_discord(&system, tau, cfg, &point_opt) {
                    Ok(q) => ScanPoint {
                        g_over_omega: g,
                        discord: q.value,
                        cutoff,
                        seed,
                        optimal_angles: q.optimal_frame.angles,
                        warning: q.warning,
                    },
                    Err(e) => failed(cutoff, e),
                })
                .collect()
        })
        .collect();

    Ok(taus
        .iter()
        .enumerate()
        .map(|(t, &tau)| {
            let points: Vec<ScanPoint> = columns.iter().map(|c| c[t].clone()).collect();
            ScanRecord {
                qubit_count: n,
                tau,
                basis: template.space.basis,
                partition: cfg.partition,
                master_seed: opt.master_seed,
                g_over_omega: g_grid.to_vec(),
                discord: points.iter().map(|p| p.discord).collect(),
                points,
            }
        })
        .collect())
}

pub fn discord_scan(
    template: &ModelParams,
    tau: f64,
    g_grid: &[f64],
    partition: Partition,
    opt: &OptimizerConfig,
) -> Result<ScanRecord> {
    let cfg = ScanConfig { partition, ..Default::default() };
    Ok(discord_scan_multi(template, &[tau], g_grid, &cfg, opt)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
    /// Grid index of the raw extremum.
    pub index: usize,
    pub boundary: bool,
    pub degenerate: bool,
}

/// Grid extremum refined by the parabola through it and its two neighbours.
/// NaN samples are ignored.
pub fn locate_extremum(x: &[f64], y: &[f64], kind: ExtremumKind) -> Result<Extremum> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let valid: Vec<usize> = (0..y.len()).filter(|&i| y[i].is_finite()).collect();
    if valid.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 finite samples, got {}", valid.len())));
    }
    let sign = match kind {
        ExtremumKind::Max => 1.0,
        ExtremumKind::Min => -1.0,
    };
    let (lo, hi) = valid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| (a.min(y[i]), b.max(y[i])));
    if hi - lo <= 1e-12 {
        let (first, last) = (valid[0], valid[valid.len() - 1]);
        let mid = valid[valid.len() / 2];
        return Ok(Extremum { x: 0.5 * (x[first] + x[last]), value: y[mid], index: mid, boundary: false, degenerate: true });
    }
    let mut best = 0;
    for k in 1..valid.len() {
        if sign * y[valid[k]] > sign * y[valid[best]] {
            best = k;
        }
    }
    let index = valid[best];
    if best == 0 || best == valid.len() - 1 {
        return Ok(Extremum { x: x[index], value: y[index], index, boundary: true, degenerate: false });
    }
    let (i0, i1, i2) = (valid[best - 1], index, valid[best + 1]);
    let (x0, x1, x2) = (x[i0], x[i1], x[i2]);
    let (y0, y1, y2) = (y[i0], y[i1], y[i2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a == 0.0 || !a.is_finite() {
        return Ok(Extremum { x: x1, value: y1, index, boundary: false, degenerate: false });
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let value = y0 + (xv - x0) * (d01 + a * (xv - x1));
    Ok(Extremum { x: xv, value, index, boundary: false, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least squares fit of `y = prefactor · x^exponent` on `(log x, log y)`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points, got {}", x.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("power-law data must be positive, got {v}")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    let ss_res: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(PowerLawFit { exponent: slope, prefactor: intercept.exp(), r_squared, n_points: x.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_grid_endpoints_and_spacing() {
        let g = default_discord_grid();
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[59], 2.0);
        let ratio = g[1] / g[0];
        assert!(g.windows(2).all(|w| ((w[1] / w[0]) - ratio).abs() < 1e-12));
        assert!(log_grid(0.0, 1.0, 5).is_err());
    }

    #[test]
    fn parabola_vertex_is_exact() {
        let x: Vec<f64> = (0..11).map(|i| 0.1 * i as f64 + 0.03 * (i as f64).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| -3.0 * (v - 0.437) * (v - 0.437) + 1.25).collect();
        let e = locate_extremum(&x, &y, ExtremumKind::Max).unwrap();
        assert_abs_diff_eq!(e.x, 0.437, epsilon = 1e-10);
        assert_abs_diff_eq!(e.value, 1.25, epsilon = 1e-10);
        assert!(!e.boundary && !e.degenerate);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let e = locate_extremum(&x, &neg, ExtremumKind::Min).unwrap();
        assert_abs_diff_eq!(e.x, 0.437, epsilon = 1e-10);
    }

    #[test]
    fn monotone_and_flat_records() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let e = locate_extremum(&x, &[1.0, 2.0, 3.0, 4.0], ExtremumKind::Max).unwrap();
        assert!(e.boundary);
        assert_eq!(e.x, 4.0);
        let e = locate_extremum(&x, &[0.5; 4], ExtremumKind::Max).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.x, 2.5);
        assert!(locate_extremum(&x[..2], &[1.0, 2.0], ExtremumKind::Min).is_err());
    }

    #[test]
    fn power_law_examples() {
        let x = [0.5_f64, 1.0, 2.0, 3.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v.powf(-0.5)).collect();
        let f = power_law_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(f.exponent, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.prefactor, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let f = power_law_fit(&[1.0, 3.0], &[2.0, 0.7]).unwrap();
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert_eq!(f.n_points, 2);
        assert!(power_law_fit(&[1.0, -2.0], &[1.0, 1.0]).is_err());
        assert!(power_law_fit(&[1.0], &[1.0]).is_err());
        assert!(power_law_fit(&[1.0, 2.0], &[1.0]).is_err());
        let f = power_law_fit(&[1.0, 2.0, 4.0], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn decoupled_ground_state_has_no_discord() {
        let opt = OptimizerConfig { n_hops: 3, n_restarts: 1, ..Default::default() };
        for n in 1..=2 {
            let p = ModelParams::resonant(n, 4, Basis::DickeSymmetric, 0.0).unwrap();
            let r = discord_scan(&p, 0.0, &[0.0], Partition::FieldVsQubits, &opt).unwrap();
            assert!(r.discord[0].abs() < 1e-9);
        }
        let p = ModelParams::resonant(3, 4, Basis::FullTensor, 0.0).unwrap();
        let r = discord_scan(&p, 0.0, &[0.0], Partition::OneVsRest, &opt).unwrap();
        assert!(r.discord[0].abs() < 1e-9);
    }

    #[test]
    fn ground_state_marginal_agrees_between_bases() {
        for n in 2..=3 {
            let full = ModelParams::resonant(n, 20, Basis::FullTensor, 0.4).unwrap();
            let dicke = full.with_basis(Basis::DickeSymmetric).unwrap();
            let (sf, sd) = (Eigensystem::solve(&full).unwrap(), Eigensystem::solve(&dicke).unwrap());
            let pf = sf.populations(&ThermalConfig::new(0.0)).unwrap();
            let pd = sd.populations(&ThermalConfig::new(0.0)).unwrap();
            let a = one_vs_rest_state(&sf, &pf, 0.0).unwrap();
            let b = one_vs_rest_state(&sd, &pd, 0.0).unwrap();
            assert!(crate::linalg::max_abs(&(a.matrix - b.matrix)) < 1e-10);
        }
    }

    #[test]
    fn scan_rejects_bad_inputs() {
        let opt = OptimizerConfig::default();
        let p1 = ModelParams::resonant(1, 4, Basis::FullTensor, 0.0).unwrap();
        assert!(discord_scan(&p1, 0.1, &[0.1], Partition::OneVsRest, &opt).is_err());
        assert!(discord_scan(&p1, 0.1, &[], Partition::FieldVsQubits, &opt).is_err());
        assert!(discord_scan(&p1, 0.1, &[0.2, 0.1], Partition::FieldVsQubits, &opt).is_err());
        assert!(discord_scan(&p1, -0.1, &[0.1], Partition::FieldVsQubits, &opt).is_err());
    }
}
