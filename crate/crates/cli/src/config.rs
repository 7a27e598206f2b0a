//! Run configuration: a flat TOML table, overridden by `--set key=value`.

use std::path::{Path, PathBuf};

use rabicorr::analysis::{linear_grid, log_grid, Partition};
use rabicorr::units::{dimensionless_temperature, REFERENCE_FREQUENCY_GHZ, REFERENCE_TEMPERATURE_MK};
use rabicorr::{Basis, CutoffPolicy, ModelParams, OptimizerConfig, QubitConvention};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Qubits {
    One(usize),
    Many(Vec<usize>),
}

impl Qubits {
    pub fn counts(&self) -> Vec<usize> {
        match self {
            Qubits::One(n) => vec![*n],
            Qubits::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    Fixed,
    Initial,
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Every key any command understands. Keys a command does not use are
/// ignored by it; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output: Option<PathBuf>,
    pub master_seed: Option<u64>,

    pub qubits: Option<Qubits>,
    pub basis: Option<Basis>,
    pub convention: Option<QubitConvention>,
    pub omega_r: Option<f64>,
    pub omega_q: Option<f64>,
    pub cutoff_mode: Option<CutoffMode>,
    pub fock_cutoff: Option<usize>,
    pub cutoff_levels: Option<usize>,
    pub cutoff_tol: Option<f64>,

    pub g_min: Option<f64>,
    pub g_max: Option<f64>,
    pub g_points: Option<usize>,
    pub g_spacing: Option<Spacing>,
    pub g_values: Option<Vec<f64>>,

    pub temperatures_mk: Option<Vec<f64>>,
    pub frequency_ghz: Option<f64>,
    pub taus: Option<Vec<f64>>,

    pub n_hops: Option<usize>,
    pub hop_scale: Option<f64>,
    pub metropolis_temperature: Option<f64>,
    pub local_max_iters: Option<usize>,
    pub local_tolerance: Option<f64>,
    pub n_restarts: Option<usize>,
    pub fd_step: Option<f64>,
    pub restart_spread: Option<f64>,

    pub levels: Option<usize>,

    pub partition: Option<Partition>,
    pub tail_tol: Option<f64>,
    pub level_cutoff: Option<usize>,
    pub save_angles: Option<bool>,

    pub omega_h: Option<f64>,
    pub omega_c: Option<f64>,
    pub t_hot_mk: Option<f64>,
    pub t_cold_mk: Option<f64>,
    pub tau_hot: Option<f64>,
    pub tau_cold: Option<f64>,
    pub stages: Option<Vec<usize>>,
    pub discord_max_qubits: Option<usize>,
    pub discord_basis: Option<Basis>,

    pub input: Option<PathBuf>,
    pub x_column: Option<String>,
    pub y_column: Option<String>,
    pub group_by: Option<String>,
    pub x_shift: Option<f64>,
}

/// Grid used when the config gives none.
#[derive(Debug, Clone, Copy)]
pub struct GridDefault {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses a `--set` value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| config_err(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| config_err(format!("override `{item}` is not of the form key=value")))?;
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.message().to_string()))
    }

    pub fn output_stem(&self) -> Result<PathBuf, CliError> {
        let path = self.output.clone().ok_or_else(|| config_err("no output path (set `output` or pass --output)"))?;
        let stem = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("json") => path.with_extension(""),
            _ => path,
        };
        if stem.file_name().is_none() {
            return Err(config_err(format!("output `{}` has no file name", stem.display())));
        }
        let dir = match stem.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let meta = std::fs::metadata(&dir).map_err(|e| config_err(format!("output directory {}: {e}", dir.display())))?;
        if !meta.is_dir() || meta.permissions().readonly() {
            return Err(config_err(format!("output directory {} is not writable", dir.display())));
        }
        Ok(stem)
    }

    pub fn qubit_counts(&self, default: usize) -> Result<Vec<usize>, CliError> {
        let counts = self.qubits.as_ref().map(Qubits::counts).unwrap_or_else(|| vec![default]);
        if counts.is_empty() {
            return Err(config_err("`qubits` is empty"));
        }
        if let Some(n) = counts.iter().find(|n| **n == 0) {
            return Err(config_err(format!("qubit count {n} is not positive")));
        }
        Ok(counts)
    }

    pub fn cutoff_policy(&self) -> Result<CutoffPolicy, CliError> {
        let mode = self.cutoff_mode.unwrap_or(if self.fock_cutoff.is_some() { CutoffMode::Fixed } else { CutoffMode::Converged });
        let defaults = CutoffPolicy::default();
        let (d_levels, d_tol) = match defaults {
            CutoffPolicy::Converged { n_levels, tol } => (n_levels, tol),
            _ => (5, 1e-8),
        };
        Ok(match mode {
            CutoffMode::Fixed => {
                CutoffPolicy::Fixed(self.fock_cutoff.ok_or_else(|| config_err("cutoff_mode = \"fixed\" needs `fock_cutoff`"))?)
            }
            CutoffMode::Initial => CutoffPolicy::Initial,
            CutoffMode::Converged => {
                let tol = self.cutoff_tol.unwrap_or(d_tol);
                if !(tol > 0.0) {
                    return Err(config_err(format!("cutoff_tol must be positive, got {tol}")));
                }
                CutoffPolicy::Converged { n_levels: self.cutoff_levels.unwrap_or(d_levels).max(1), tol }
            }
        })
    }

    /// Template model for `n` qubits at zero coupling; the cutoff is
    /// resolved per grid point.
    pub fn model(&self, n: usize, basis: Basis) -> Result<ModelParams, CliError> {
        let omega_r = self.omega_r.unwrap_or(1.0);
        let omega_q = self.omega_q.unwrap_or(omega_r);
        let mut p = ModelParams::homogeneous(n, 2, basis, omega_r, omega_q, 0.0).map_err(CliError::from)?;
        p.convention = self.convention.unwrap_or_default();
        Ok(p)
    }

    pub fn grid(&self, default: GridDefault) -> Result<Vec<f64>, CliError> {
        let explicit = self.g_min.is_some() || self.g_max.is_some() || self.g_points.is_some() || self.g_spacing.is_some();
        let grid = if let Some(values) = &self.g_values {
            if explicit {
                return Err(config_err("give either `g_values` or g_min/g_max/g_points/g_spacing, not both"));
            }
            values.clone()
        } else {
            let lo = self.g_min.unwrap_or(default.min);
            let hi = self.g_max.unwrap_or(default.max);
            let n = self.g_points.unwrap_or(default.points);
            match (n, self.g_spacing.unwrap_or(default.spacing)) {
                (0, _) => Vec::new(),
                (1, _) => vec![lo],
                (n, Spacing::Linear) => linear_grid(lo, hi, n)?,
                (n, Spacing::Log) => log_grid(lo, hi, n)?,
            }
        };
        if grid.is_empty() {
            return Err(config_err("the coupling grid is empty"));
        }
        if grid.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(config_err("couplings must be finite and non-negative"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err("the coupling grid must be strictly increasing"));
        }
        Ok(grid)
    }

    fn uses_millikelvin(&self) -> bool {
        self.temperatures_mk.is_some() || self.frequency_ghz.is_some() || self.t_hot_mk.is_some() || self.t_cold_mk.is_some()
    }

    fn uses_tau(&self) -> bool {
        self.taus.is_some() || self.tau_hot.is_some() || self.tau_cold.is_some()
    }

    fn check_units(&self) -> Result<(), CliError> {
        if self.uses_millikelvin() && self.uses_tau() {
            return Err(config_err("temperatures must be given either in mK (with frequency_ghz) or as dimensionless taus, not both"));
        }
        Ok(())
    }

    fn to_tau(&self, mk: f64) -> Result<f64, CliError> {
        let f = self.frequency_ghz.unwrap_or(REFERENCE_FREQUENCY_GHZ);
        if !(f > 0.0 && f.is_finite()) {
            return Err(config_err(format!("frequency_ghz must be positive, got {f}")));
        }
        if !(mk >= 0.0 && mk.is_finite()) {
            return Err(config_err(format!("temperature {mk} mK is not a non-negative number")));
        }
        Ok(dimensionless_temperature(mk, f))
    }

    /// Scan temperatures as `τ`; defaults to 19 mK at 8 GHz.
    pub fn taus(&self) -> Result<Vec<f64>, CliError> {
        self.check_units()?;
        let taus = match (&self.taus, &self.temperatures_mk) {
            (Some(t), _) => t.clone(),
            (None, Some(mk)) => mk.iter().map(|&t| self.to_tau(t)).collect::<Result<_, _>>()?,
            (None, None) => vec![self.to_tau(REFERENCE_TEMPERATURE_MK)?],
        };
        if taus.is_empty() {
            return Err(config_err("no temperatures given"));
        }
        if let Some(t) = taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(config_err(format!("temperature {t} is not a non-negative number")));
        }
        Ok(taus)
    }

    /// Hot and cold bath temperatures as `τ`; defaults `T_c = 19 mK`,
    /// `T_h = 9 T_c` at 8 GHz.
    pub fn bath_taus(&self) -> Result<(f64, f64), CliError> {
        self.check_units()?;
        let (hot, cold) = if self.uses_tau() {
            let cold = self.tau_cold.unwrap_or(self.to_tau(REFERENCE_TEMPERATURE_MK)?);
            (self.tau_hot.unwrap_or(9.0 * cold), cold)
        } else {
            let cold = self.t_cold_mk.unwrap_or(REFERENCE_TEMPERATURE_MK);
            let hot = self.t_hot_mk.unwrap_or(9.0 * cold);
            (self.to_tau(hot)?, self.to_tau(cold)?)
        };
        if !(cold >= 0.0 && hot >= 0.0 && hot.is_finite()) {
            return Err(config_err(format!("bath temperatures must be non-negative, got {hot} and {cold}")));
        }
        Ok((hot, cold))
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, CliError> {
        let d = OptimizerConfig::default();
        let cfg = OptimizerConfig {
            n_hops: self.n_hops.unwrap_or(d.n_hops),
            hop_scale: self.hop_scale.unwrap_or(d.hop_scale),
            metropolis_temperature: self.metropolis_temperature.unwrap_or(d.metropolis_temperature),
            local_max_iters: self.local_max_iters.unwrap_or(d.local_max_iters),
            local_tolerance: self.local_tolerance.unwrap_or(d.local_tolerance),
            n_restarts: self.n_restarts.unwrap_or(d.n_restarts),
            master_seed: self.master_seed.unwrap_or(d.master_seed),
            fd_step: self.fd_step.unwrap_or(d.fd_step),
            restart_spread: self.restart_spread.unwrap_or(d.restart_spread),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
