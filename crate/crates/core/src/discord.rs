//! Entropies, projective measurements on `B`, and quantum discord.
//!
//! All entropies are in bits. Measurements are rank-one projectors
//! `I_A ⊗ V|j⟩⟨j|V†` with `V` a product of two-level unitaries.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, entropy_bits, hermiticity_error, normalized_entropy_bits, CMatrix, ENTROPY_ZERO};
use crate::optimizer::{basin_hop, OptimizerConfig};
use crate::statespace::{DensityMatrix, Ensemble, Subsystem};

/// Eigenvalues more negative than this make a state invalid.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Optimised discord within this distance below zero is reported as zero.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFrame {
    pub dim_b: usize,
    pub angles: Vec<f64>,
}

impl MeasurementFrame {
    pub fn angle_count(dim_b: usize) -> usize {
        3 * dim_b * dim_b.saturating_sub(1) / 2
    }

    pub fn new(dim_b: usize, angles: Vec<f64>) -> Result<Self> {
        if dim_b < 2 {
            return Err(Error::InvalidDimension(format!("measured subsystem needs d >= 2, got {dim_b}")));
        }
        let expected = Self::angle_count(dim_b);
        if angles.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: angles.len() });
        }
        Ok(Self { dim_b, angles })
    }

    pub fn zeros(dim_b: usize) -> Result<Self> {
        Self::new(dim_b, vec![0.0; Self::angle_count(dim_b)])
    }

    /// Same frame with every angle reduced into `[0, 2π)`.
    pub fn wrapped(&self) -> Self {
        let angles = self
            .angles
            .iter()
            .map(|a| {
                let w = a.rem_euclid(TAU);
                if w >= TAU { 0.0 } else { w }
            })
            .collect();
        Self { dim_b: self.dim_b, angles }
    }

    pub fn unitary(&self) -> CMatrix {
        unitary_from_angles(self.dim_b, &self.angles)
    }

    /// The projectors `V|j⟩⟨j|V†`.
    pub fn projectors(&self) -> Vec<CMatrix> {
        let v = self.unitary();
        (0..self.dim_b)
            .map(|j| {
                let col = v.column(j);
                col * col.adjoint()
            })
            .collect()
    }
}

/// `V = Π_{k=1}^{d-1} Π_{n=1}^{d-k} V_{k,n}` multiplied left to right in
/// increasing `(k, n)`; block `t` consumes angles `3t..3t+3`.
fn unitary_from_angles(d: usize, angles: &[f64]) -> CMatrix {
    let mut v = CMatrix::identity(d, d);
    let mut t = 0;
    for k in 0..d - 1 {
        for n in 1..d - k {
            let (p1, p2, p3) = (angles[3 * t], angles[3 * t + 1], angles[3 * t + 2]);
            t += 1;
            let (s, c) = p1.sin_cos();
            let e2 = Complex64::from_polar(1.0, p2);
            let e3 = Complex64::from_polar(1.0, p3);
            let kk = e2 * s;
            let kn = e3.conj() * c;
            let nk = e3 * c;
            let nn = -e2.conj() * s;
            let (a, b) = (k, k + n);
            // Right multiplication mixes columns a and b only.
            for r in 0..d {
                let va = v[(r, a)];
                let vb = v[(r, b)];
                v[(r, a)] = va * kk + vb * nk;
                v[(r, b)] = va * kn + vb * nn;
            }
        }
    }
    v
}

pub fn measurement_unitary(frame: &MeasurementFrame) -> Result<CMatrix> {
    MeasurementFrame::new(frame.dim_b, frame.angles.clone())?;
    Ok(frame.unitary())
}

/// Entropy in bits of a Hermitian positive semidefinite matrix.
pub fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    let values = eigvalsh(m);
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -PSD_TOLERANCE {
            return Err(Error::NotPositive { eigenvalue: min });
        }
    }
    Ok(entropy_bits(&values))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let dev = hermiticity_error(&rho.matrix);
    if dev > PSD_TOLERANCE {
        return Err(Error::NotHermitian { deviation: dev });
    }
    matrix_entropy(&rho.matrix)
}

fn check_dims(rho: &DensityMatrix) -> Result<()> {
    if rho.dim_a * rho.dim_b != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim_a * rho.dim_b, found: rho.dim() });
    }
    Ok(())
}

pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    check_dims(rho)?;
    let s_ab = von_neumann_entropy(rho)?;
    let s_a = matrix_entropy(&rho.partial_trace(Subsystem::A).matrix)?;
    let s_b = matrix_entropy(&rho.partial_trace(Subsystem::B).matrix)?;
    Ok(s_a + s_b - s_ab)
}

pub fn conditional_entropy(rho: &DensityMatrix, frame: &MeasurementFrame) -> Result<f64> {
    check_dims(rho)?;
    if frame.dim_b != rho.dim_b {
        return Err(Error::DimensionMismatch { expected: rho.dim_b, found: frame.dim_b });
    }
    MeasurementFrame::new(frame.dim_b, frame.angles.clone())?;
    Ok(MeasuredEntropy::from_density(rho).evaluate(&frame.angles))
}

#[derive(Debug, Clone)]
enum Route {
    /// `ρ_A^j = Σ conj(u_b) u_b' B_{bb'}` with `B_{bb'}` the `(b, b')` block of ρ.
    Dense { blocks: Vec<CMatrix> },
    /// Spectrum of `ρ_A^j` from the `m × m` Gram matrix
    /// `G^j = Σ u_b conj(u_b') M_{bb'}`,
    /// `M_{bb'}[k, l] = √(p_k p_l) Σ_a conj(ψ_k(a, b)) ψ_l(a, b')`.
    Gram { blocks: Vec<CMatrix> },
}

/// Precomputed post-measurement conditional entropy `S(A | Π^B(θ))` of one state.
#[derive(Debug, Clone)]
pub struct MeasuredEntropy {
    dim_b: usize,
    route: Route,
}

impl MeasuredEntropy {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let (da, db) = (rho.dim_a, rho.dim_b);
        let m = &rho.matrix;
        let blocks = (0..db * db)
            .map(|bb| {
                let (b, b2) = (bb / db, bb % db);
                CMatrix::from_fn(da, da, |a, a2| m[(a * db + b, a2 * db + b2)])
            })
            .collect();
        Self { dim_b: db, route: Route::Dense { blocks } }
    }

    /// Chooses the cheaper of the dense and Gram evaluations.
    pub fn from_ensemble(ens: &Ensemble) -> Self {
        let (da, db) = (ens.dim_a, ens.dim_b);
        let rank = ens.rank();
        if da <= rank {
            return Self::from_density(&ens.to_density());
        }
        let scaled: Vec<Vec<Complex64>> = (0..rank)
            .map(|k| {
                let s = ens.weights[k].sqrt();
                ens.vectors.column(k).iter().map(|z| z * s).collect()
            })
            .collect();
        let blocks = (0..db * db)
            .map(|bb| {
                let (b, b2) = (bb / db, bb % db);
                CMatrix::from_fn(rank, rank, |k, l| {
                    (0..da).map(|a| scaled[k][a * db + b].conj() * scaled[l][a * db + b2]).sum()
                })
            })
            .collect();
        Self { dim_b: db, route: Route::Gram { blocks } }
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn angle_count(&self) -> usize {
        MeasurementFrame::angle_count(self.dim_b)
    }

    /// `Σ_j p_j S(ρ_A^j / p_j)` in bits for the frame with these angles.
    pub fn evaluate(&self, angles: &[f64]) -> f64 {
        let d = self.dim_b;
        let v = unitary_from_angles(d, angles);
        let (blocks, gram) = match &self.route {
            Route::Dense { blocks } => (blocks, false),
            Route::Gram { blocks } => (blocks, true),
        };
        let size = blocks[0].nrows();
        let mut total = 0.0;
        let mut acc = CMatrix::zeros(size, size);
        for j in 0..d {
            let u = v.column(j);
            acc.fill(Complex64::new(0.0, 0.0));
            // Accumulate the upper half and diagonal, then add the adjoint.
            for b in 0..d {
                let half = 0.5 * u[b].norm_sqr();
                add_scaled(&mut acc, Complex64::new(half, 0.0), &blocks[b * d + b]);
                for b2 in b + 1..d {
                    let w = if gram { u[b] * u[b2].conj() } else { u[b].conj() * u[b2] };
                    add_scaled(&mut acc, w, &blocks[b * d + b2]);
                }
            }
            let x = &acc + acc.adjoint();
            let p = x.trace().re;
            if p < ENTROPY_ZERO {
                continue;
            }
            total += p * normalized_entropy_bits(&eigvalsh(&x), p);
        }
        total
    }
}

fn add_scaled(acc: &mut CMatrix, w: Complex64, m: &CMatrix) {
    acc.as_mut_slice().iter_mut().zip(m.as_slice()).for_each(|(a, x)| *a += w * x);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub hops_accepted: usize,
    pub best_curve: Vec<f64>,
    pub restart_best: Vec<f64>,
    pub local_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscordResult {
    pub value: f64,
    pub optimal_frame: MeasurementFrame,
    pub conditional_entropy: f64,
    pub mutual_information: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub entropy_ab: f64,
    pub optimizer_trace: OptimizerTrace,
    pub converged: bool,
    pub warning: Option<String>,
}

fn optimise(objective: &MeasuredEntropy, s_a: f64, s_b: f64, s_ab: f64, opt: &OptimizerConfig) -> Result<DiscordResult> {
    let db = objective.dim_b();
    if db < 2 {
        return Err(Error::InvalidDimension(format!("measured subsystem needs d >= 2, got {db}")));
    }
    let x0 = vec![0.0; objective.angle_count()];
    let f = |x: &[f64]| objective.evaluate(x);
    let out = basin_hop(&f, &x0, opt)?;
    let ce = out.best_value;
    let raw = s_b - s_ab + ce;
    let value = if raw < 0.0 && raw >= -CLAMP_TOLERANCE { 0.0 } else { raw };
    let mut warnings = Vec::new();
    if !out.converged {
        warnings.push("local minimiser hit the iteration limit".to_string());
    }
    if out.local_failures > 0 {
        warnings.push(format!("{} local minimisations failed", out.local_failures));
    }
    if raw < -CLAMP_TOLERANCE {
        warnings.push(format!("negative discord {raw:e}"));
    }
    Ok(DiscordResult {
        value,
        optimal_frame: MeasurementFrame::new(db, out.best_point)?.wrapped(),
        conditional_entropy: ce,
        mutual_information: s_a + s_b - s_ab,
        entropy_a: s_a,
        entropy_b: s_b,
        entropy_ab: s_ab,
        optimizer_trace: OptimizerTrace {
            hops_accepted: out.hops_accepted,
            best_curve: out.best_curve,
            restart_best: out.restart_best,
            local_failures: out.local_failures,
        },
        converged: out.converged,
        warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
    })
}

/// Discord of `ρ_AB` with the measurement on `B`.
pub fn quantum_discord(rho: &DensityMatrix, opt: &OptimizerConfig) -> Result<DiscordResult> {
    check_dims(rho)?;
    if rho.dim_b < 2 {
        return Err(Error::InvalidDimension(format!("measured subsystem needs d >= 2, got {}", rho.dim_b)));
    }
    let s_ab = von_neumann_entropy(rho)?;
    let s_a = matrix_entropy(&rho.partial_trace(Subsystem::A).matrix)?;
    let s_b = matrix_entropy(&rho.partial_trace(Subsystem::B).matrix)?;
    optimise(&MeasuredEntropy::from_density(rho), s_a, s_b, s_ab, opt)
}

/// Discord of a low-rank mixture without forming the full density matrix.
pub fn quantum_discord_ensemble(ens: &Ensemble, opt: &OptimizerConfig) -> Result<DiscordResult> {
    if ens.dim_b < 2 {
        return Err(Error::InvalidDimension(format!("measured subsystem needs d >= 2, got {}", ens.dim_b)));
    }
    let s_ab = entropy_bits(&ens.weights);
    let s_a = matrix_entropy(&ens.reduced_a())?;
    let s_b = matrix_entropy(&ens.reduced_b())?;
    optimise(&MeasuredEntropy::from_ensemble(ens), s_a, s_b, s_ab, opt)
}
