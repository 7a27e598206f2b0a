//! Basin hopping with a nonlinear conjugate-gradient local minimiser.
//!
//! Objectives are smooth functions of an unconstrained real vector. Gradients
//! come from central finite differences. Restarts run as independent chains,
//! each driven by a ChaCha8 stream selected by `(master_seed, restart_index)`,
//! so a run is reproducible regardless of how restarts are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub n_hops: usize,
    /// Half-width of the uniform hop, radians.
    pub hop_scale: f64,
    /// Metropolis temperature in objective units.
    pub metropolis_temperature: f64,
    pub local_max_iters: usize,
    /// Gradient-norm stopping threshold.
    pub local_tolerance: f64,
    pub n_restarts: usize,
    pub master_seed: u64,
    /// Central-difference step.
    pub fd_step: f64,
    /// Restarts after the first start at `x0 + U[-spread, spread]`.
    pub restart_spread: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_hops: 50,
            hop_scale: 0.5,
            metropolis_temperature: 1.0,
            local_max_iters: 200,
            local_tolerance: 1e-9,
            n_restarts: 4,
            master_seed: 0x5eed,
            fd_step: 1e-6,
            restart_spread: std::f64::consts::PI,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self { master_seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 || self.local_max_iters == 0 {
            return Err(Error::InvalidParameter("restart and iteration counts must be at least 1".into()));
        }
        for (name, v) in [
            ("hop_scale", self.hop_scale),
            ("metropolis_temperature", self.metropolis_temperature),
            ("local_tolerance", self.local_tolerance),
            ("fd_step", self.fd_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.restart_spread >= 0.0) {
            return Err(Error::InvalidParameter("restart_spread must be non-negative".into()));
        }
        Ok(())
    }
}

/// Seed for task `index` of a run seeded with `master_seed` (SplitMix64 finaliser).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Anything that can be evaluated concurrently at a point.
pub trait Objective: Sync {
    fn value(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GradientTolerance,
    /// Line search or function values stalled at the noise floor.
    NoProgress,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

impl LocalOutcome {
    pub fn converged(&self) -> bool {
        self.stop != StopReason::MaxIterations
    }
}

fn gradient<O: Objective + ?Sized>(obj: &O, x: &[f64], h: f64, out: &mut [f64]) -> bool {
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = obj.value(&probe);
        probe[i] = x[i] - h;
        let down = obj.value(&probe);
        probe[i] = x[i];
        out[i] = (up - down) / (2.0 * h);
        if !out[i].is_finite() {
            return false;
        }
    }
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const STALL_LIMIT: usize = 3;

/// Polak–Ribière (PR+) conjugate gradient with Armijo backtracking.
pub fn local_minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], cfg: &OptimizerConfig) -> Result<LocalOutcome> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::NonFinite { last_point: x });
    }
    if n == 0 {
        return Ok(LocalOutcome { point: x, value: f, iterations: 0, stop: StopReason::GradientTolerance });
    }
    let mut g = vec![0.0; n];
    if !gradient(obj, &x, cfg.fd_step, &mut g) {
        return Err(Error::NonFinite { last_point: x });
    }
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut previous: Option<(f64, f64)> = None; // (Δf of last step, last accepted step)
    let mut stalls = 0;
    let mut iterations = 0;
    let mut trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    let stop = loop {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < cfg.local_tolerance {
            break StopReason::GradientTolerance;
        }
        if iterations >= cfg.local_max_iters {
            break StopReason::MaxIterations;
        }
        let mut slope = dot(&g, &d);
        let mut steepest = false;
        if slope >= 0.0 {
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -gnorm * gnorm;
            steepest = true;
        }
        let mut alpha = match previous {
            Some((df, last)) if df < 0.0 => (1.01 * 2.0 * df / slope).min(10.0 * last.max(1e-12)),
            _ => 1.0 / gnorm.max(1.0),
        };
        if !(alpha > 0.0 && alpha.is_finite()) {
            alpha = 1.0;
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = x[i] + alpha * d[i];
            }
            let ft = obj.value(&trial);
            if !ft.is_finite() {
                return Err(Error::NonFinite { last_point: x });
            }
            if ft <= f + ARMIJO_C * alpha * slope {
                accepted = Some(ft);
                break;
            }
            alpha *= SHRINK;
        }
        iterations += 1;

        let Some(f_new) = accepted else {
            if steepest {
                break StopReason::NoProgress;
            }
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            previous = None;
            continue;
        };

        if !gradient(obj, &trial, cfg.fd_step, &mut g_new) {
            return Err(Error::NonFinite { last_point: x });
        }
        let df = f_new - f;
        if df.abs() <= 1e-15 * f.abs().max(1.0) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        let gg = dot(&g, &g);
        let beta = if gg > 0.0 { (dot(&g_new, &g_new) - dot(&g_new, &g)) / gg } else { 0.0 };
        let beta = beta.max(0.0);
        for i in 0..n {
            d[i] = -g_new[i] + beta * d[i];
        }
        x.copy_from_slice(&trial);
        f = f_new;
        std::mem::swap(&mut g, &mut g_new);
        previous = Some((df, alpha));
        if stalls >= STALL_LIMIT {
            break StopReason::NoProgress;
        }
    };

    Ok(LocalOutcome { point: x, value: f, iterations, stop })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub best: LocalOutcome,
    pub hops_accepted: usize,
    pub local_failures: usize,
    /// Best value after the initial descent and after each hop.
    pub best_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub hops_accepted: usize,
    pub converged: bool,
    pub restart_best: Vec<f64>,
    /// Elementwise minimum over restarts of the best-so-far curve.
    pub best_curve: Vec<f64>,
    pub local_failures: usize,
    pub winning_restart: usize,
}

fn restart_rng(master_seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(restart as u64);
    rng
}

fn run_chain<O: Objective + ?Sized>(obj: &O, x0: &[f64], cfg: &OptimizerConfig, restart: usize) -> Result<RestartOutcome> {
    let mut rng = restart_rng(cfg.master_seed, restart);
    let start: Vec<f64> = if restart == 0 {
        x0.to_vec()
    } else {
        x0.iter().map(|x| x + rng.random_range(-1.0..=1.0) * cfg.restart_spread).collect()
    };
    let mut current = local_minimize(obj, &start, cfg)?;
    let mut best = current.clone();
    let mut best_curve = vec![best.value];
    let mut hops_accepted = 0;
    let mut local_failures = 0;
    for _ in 0..cfg.n_hops {
        let trial: Vec<f64> = current
            .point
            .iter()
            .map(|x| x + rng.random_range(-cfg.hop_scale..=cfg.hop_scale))
            .collect();
        let u: f64 = rng.random();
        match local_minimize(obj, &trial, cfg) {
            Ok(candidate) => {
                let delta = candidate.value - current.value;
                if candidate.value < best.value {
                    best = candidate.clone();
                }
                if delta < 0.0 || u < (-delta / cfg.metropolis_temperature).exp() {
                    current = candidate;
                    hops_accepted += 1;
                }
            }
            Err(_) => local_failures += 1,
        }
        best_curve.push(best.value);
    }
    Ok(RestartOutcome { best, hops_accepted, local_failures, best_curve })
}

/// Global minimisation by basin hopping over `cfg.n_restarts` chains.
pub fn basin_hop<O: Objective + ?Sized>(obj: &O, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizationOutcome> {
    cfg.validate()?;
    let chains: Vec<Result<RestartOutcome>> =
        (0..cfg.n_restarts).into_par_iter().map(|r| run_chain(obj, x0, cfg, r)).collect();

    let mut winner: Option<(usize, &RestartOutcome)> = None;
    let mut restart_best = Vec::with_capacity(chains.len());
    let mut local_failures = 0;
    let mut hops_accepted = 0;
    let mut best_curve: Vec<f64> = Vec::new();
    let mut first_error = None;
    for (r, chain) in chains.iter().enumerate() {
        match chain {
            Ok(c) => {
                restart_best.push(c.best.value);
                local_failures += c.local_failures;
                hops_accepted += c.hops_accepted;
                if best_curve.is_empty() {
                    best_curve = c.best_curve.clone();
                } else {
                    best_curve.iter_mut().zip(&c.best_curve).for_each(|(a, b)| *a = a.min(*b));
                }
                if winner.is_none_or(|(_, w)| c.best.value < w.best.value) {
                    winner = Some((r, c));
                }
            }
            Err(e) => {
                restart_best.push(f64::NAN);
                local_failures += 1;
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let Some((winning_restart, w)) = winner else {
        return Err(first_error.unwrap_or_else(|| Error::NonConvergence("no restart completed".into())));
    };
    Ok(OptimizationOutcome {
        best_point: w.best.point.clone(),
        best_value: w.best.value,
        hops_accepted,
        converged: w.best.converged(),
        restart_best,
        best_curve,
        local_failures,
        winning_restart,
    })
}
