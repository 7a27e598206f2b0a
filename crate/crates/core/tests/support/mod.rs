//! Property checks shared by the proptest suites and the acceptance runner.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rabicorr::discord::{conditional_entropy, measurement_unitary, mutual_information, von_neumann_entropy, MeasurementFrame};
use rabicorr::model::{build_hamiltonian, parity_operator, ModelParams};
use rabicorr::otto::{run_cycle, CyclePair, CycleSpec};
use rabicorr::statespace::{partial_trace, Basis, DensityMatrix, Subsystem};
use rabicorr::OptimizerConfig;

pub type CMat = DMatrix<Complex64>;

pub const CASES: u32 = 200;

pub fn norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `G G† / Tr` from a flat list of real and imaginary parts.
pub fn density_from(parts: &[f64], dim: usize, rank: usize) -> CMat {
    let g = CMat::from_fn(dim, rank, |i, j| {
        let k = 2 * (i * rank + j);
        Complex64::new(parts[k], parts[k + 1])
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho / Complex64::new(tr, 0.0)
}

/// A random bipartite state: `(dim_a, dim_b, rank, entries)`.
pub fn any_state() -> impl Strategy<Value = DensityMatrix> {
    (2usize..=4, 2usize..=3, 1usize..=4)
        .prop_flat_map(|(da, db, r)| {
            let n = 2 * da * db * r;
            (Just(da), Just(db), Just(r), prop::collection::vec(-1.0f64..1.0, n))
        })
        .prop_filter_map("degenerate draw", |(da, db, r, parts)| {
            if parts.iter().all(|p| p.abs() < 1e-3) {
                return None;
            }
            DensityMatrix::new(density_from(&parts, da * db, r), da, db).ok()
        })
}

pub fn any_model() -> impl Strategy<Value = ModelParams> {
    (1usize..=3, 2usize..=8, prop::bool::ANY, 0.0f64..2.0, 0.2f64..3.0, 0.2f64..3.0).prop_map(|(n, cutoff, dicke, g, wr, wq)| {
        let basis = if dicke { Basis::DickeSymmetric } else { Basis::FullTensor };
        ModelParams::homogeneous(n, cutoff, basis, wr, wq, g).expect("valid draw")
    })
}

pub fn any_frame() -> impl Strategy<Value = MeasurementFrame> {
    (2usize..=5)
        .prop_flat_map(|d| (Just(d), prop::collection::vec(-10.0f64..10.0, MeasurementFrame::angle_count(d))))
        .prop_map(|(d, a)| MeasurementFrame::new(d, a).expect("right angle count"))
}

pub fn any_cycle() -> impl Strategy<Value = CycleSpec> {
    (1usize..=3, prop::bool::ANY, 0.0f64..2.0, 1.0f64..3.0, 0.0f64..1.0, 1.0f64..10.0).prop_map(
        |(n, dicke, g, omega_h, tau_c, ratio)| {
            let mut spec = CycleSpec::standard(n, g).expect("valid draw");
            let basis = if dicke { Basis::DickeSymmetric } else { Basis::FullTensor };
            spec.base_params = spec.base_params.with_basis(basis).expect("valid basis");
            spec.omega_h = omega_h;
            spec.tau_c = tau_c;
            spec.tau_h = tau_c * ratio;
            spec.discord.stages.clear();
            spec
        },
    )
}

pub fn parity_commutes(params: &ModelParams) -> Result<(), TestCaseError> {
    let h = build_hamiltonian(params).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let p = parity_operator(&params.space);
    let comm = &h * &p - &p * &h;
    prop_assert!(norm(&comm) <= 1e-9 * norm(&h).max(1.0), "|[H, P]| = {:e}", norm(&comm));
    prop_assert!(norm(&(&p * &p - CMat::identity(p.nrows(), p.nrows()))) <= 1e-12);
    Ok(())
}

pub fn entropy_bounds(rho: &DensityMatrix, frame_angles: &[f64]) -> Result<(), TestCaseError> {
    let fail = |e: rabicorr::Error| TestCaseError::fail(e.to_string());
    let tol = 1e-9;
    let s_ab = von_neumann_entropy(rho).map_err(fail)?;
    let rho_a = partial_trace(rho, Subsystem::A).map_err(fail)?;
    let rho_b = partial_trace(rho, Subsystem::B).map_err(fail)?;
    let s_a = von_neumann_entropy(&rho_a).map_err(fail)?;
    let s_b = von_neumann_entropy(&rho_b).map_err(fail)?;
    let (la, lb) = ((rho.dim_a as f64).log2(), (rho.dim_b as f64).log2());
    prop_assert!(s_ab >= -tol && s_ab <= la + lb + tol);
    prop_assert!(s_a >= -tol && s_a <= la + tol);
    prop_assert!(s_b >= -tol && s_b <= lb + tol);
    // Araki-Lieb and subadditivity.
    prop_assert!(s_ab >= (s_a - s_b).abs() - tol);
    prop_assert!(s_ab <= s_a + s_b + tol);
    let i = mutual_information(rho).map_err(fail)?;
    prop_assert!(i >= -tol && i <= 2.0 * la.min(lb) + tol, "I = {i}");
    let n = MeasurementFrame::angle_count(rho.dim_b);
    let frame = MeasurementFrame::new(rho.dim_b, frame_angles[..n].to_vec()).map_err(fail)?;
    let measured = conditional_entropy(rho, &frame).map_err(fail)?;
    prop_assert!(measured >= s_ab - s_b - tol, "S(A|Pi) = {measured} < {}", s_ab - s_b);
    prop_assert!(measured <= s_a + tol, "S(A|Pi) = {measured} > S(A) = {s_a}");
    Ok(())
}

pub fn frame_is_unitary(frame: &MeasurementFrame) -> Result<(), TestCaseError> {
    let d = frame.dim_b;
    let v = measurement_unitary(frame).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let id = CMat::identity(d, d);
    prop_assert!(norm(&(v.adjoint() * &v - &id)) <= 1e-9);
    let projectors = frame.projectors();
    prop_assert_eq!(projectors.len(), d);
    let sum = projectors.iter().fold(CMat::zeros(d, d), |acc, p| acc + p);
    prop_assert!(norm(&(sum - &id)) <= 1e-9);
    for (k, p) in projectors.iter().enumerate() {
        for (l, q) in projectors.iter().enumerate() {
            let expected = if k == l { p.clone() } else { CMat::zeros(d, d) };
            prop_assert!(norm(&(p * q - expected)) <= 1e-9);
        }
    }
    Ok(())
}

/// Stage 2 is the hot populations on cold eigenvectors, stage 4 the cold
/// populations on hot eigenvectors.
pub fn adiabatic_populations(spec: &CycleSpec) -> Result<(), TestCaseError> {
    let fail = |e: rabicorr::Error| TestCaseError::fail(e.to_string());
    let pair = CyclePair::solve(spec, spec.base_params.space.basis).map_err(fail)?;
    let stages = pair.stage_states(0.0).map_err(fail)?;
    for (stage, system, pops) in [(1, &pair.cold, &pair.p_hot), (3, &pair.hot, &pair.p_cold)] {
        let ens = &stages[stage];
        let h = build_hamiltonian(&system.params).map_err(fail)?;
        let energies = system.energies();
        let mut weights = ens.weights.clone();
        let mut expected: Vec<f64> = pops.iter().copied().filter(|p| *p > 0.0).collect();
        let total: f64 = expected.iter().sum();
        expected.iter_mut().for_each(|p| *p /= total);
        prop_assert_eq!(weights.len(), expected.len());
        weights.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        for (w, p) in weights.iter().zip(&expected) {
            prop_assert!((w - p).abs() <= 1e-12);
        }
        let mut mean = 0.0;
        for (j, w) in ens.weights.iter().enumerate() {
            let v = ens.vectors.column(j).into_owned();
            let hv = &h * &v;
            let e = v.dotc(&hv).re;
            prop_assert!(norm(&CMat::from_column_slice(v.len(), 1, (hv - &v * Complex64::new(e, 0.0)).as_slice())) <= 1e-8);
            mean += w * e;
        }
        let oracle: f64 = pops.iter().zip(&energies).map(|(p, e)| p * e).sum::<f64>() / total;
        prop_assert!((mean - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
    }
    Ok(())
}

fn energy(h: &CMat, ens: &rabicorr::Ensemble) -> f64 {
    (0..ens.weights.len())
        .map(|j| {
            let v = ens.vectors.column(j).into_owned();
            ens.weights[j] * v.dotc(&(h * &v)).re
        })
        .sum()
}

/// `W` from the two adiabatic strokes equals `Q_h + Q_c` from the two
/// isochoric ones, and the reported record agrees with both.
pub fn first_law(spec: &CycleSpec) -> Result<(), TestCaseError> {
    let fail = |e: rabicorr::Error| TestCaseError::fail(e.to_string());
    let record = run_cycle(spec, &OptimizerConfig::default()).map_err(fail)?;
    let pair = CyclePair::solve(spec, spec.base_params.space.basis).map_err(fail)?;
    let s = pair.stage_states(0.0).map_err(fail)?;
    let hh = build_hamiltonian(&pair.hot.params).map_err(fail)?;
    let hc = build_hamiltonian(&pair.cold.params).map_err(fail)?;
    let (e1, e2, e3, e4) = (energy(&hh, &s[0]), energy(&hc, &s[1]), energy(&hc, &s[2]), energy(&hh, &s[3]));
    let q_hot = e1 - e4;
    let q_cold = e3 - e2;
    let work = (e1 - e2) + (e3 - e4);
    let scale = e1.abs().max(e3.abs()).max(1.0);
    prop_assert!((work - (q_hot + q_cold)).abs() <= 1e-9 * scale);
    prop_assert!((record.q_hot - q_hot).abs() <= 1e-9 * scale, "{} vs {q_hot}", record.q_hot);
    prop_assert!((record.q_cold - q_cold).abs() <= 1e-9 * scale);
    prop_assert!((record.work - (record.q_hot + record.q_cold)).abs() <= 1e-12 * scale);
    prop_assert!((record.work - work).abs() <= 1e-9 * scale);
    Ok(())
}

/// Mean of `n + Σ m_i / 2` (m_i = ±1) for the decoupled ladder at inverse
/// temperature `beta` in units of the level spacing.
fn decoupled_mean(n: usize, beta: f64) -> f64 {
    if beta.is_infinite() {
        return -(n as f64) / 2.0;
    }
    1.0 / beta.exp_m1() - n as f64 / 2.0 * (beta / 2.0).tanh()
}

/// Otto work of the uncoupled oscillator plus `n` qubits, all at the
/// stroke frequency, from the geometric and two-level partition functions.
pub fn decoupled_work(n: usize, omega_h: f64, omega_c: f64, tau_h: f64, tau_c: f64) -> f64 {
    let beta = |w: f64, t: f64| if t == 0.0 { f64::INFINITY } else { w / t };
    (omega_h - omega_c) * (decoupled_mean(n, beta(omega_h, tau_h)) - decoupled_mean(n, beta(omega_c, tau_c)))
}

fn entropy_2x2(m: [[Complex64; 2]; 2]) -> f64 {
    let t = m[0][0].re + m[1][1].re;
    let diff = m[0][0].re - m[1][1].re;
    let r = (diff * diff + 4.0 * m[0][1].norm_sqr()).sqrt();
    [(t + r) / 2.0, (t - r) / 2.0]
        .iter()
        .filter(|l| **l > 1e-15)
        .map(|l| -l * l.log2())
        .sum()
}

fn entropy_hermitian(m: &CMat) -> f64 {
    m.clone().symmetric_eigenvalues().iter().filter(|l| **l > 1e-15).map(|l| -l * l.log2()).sum()
}

/// `Σ_k p_k S(ρ_A|k)` for the second-qubit basis `(sin φ1 e^{iφ2}, cos φ1 e^{iφ3})`.
fn measured_entropy_2x2(rho: &CMat, p1: f64, p2: f64, p3: f64) -> f64 {
    let idx = |a: usize, b: usize| 2 * a + b;
    let u = [Complex64::from_polar(p1.sin(), p2), Complex64::from_polar(p1.cos(), p3)];
    let mut total = 0.0;
    for outcome in 0..2 {
        // Π_0 = |u⟩⟨u|, Π_1 = I - Π_0.
        let proj = |b2: usize, b: usize| {
            let uu = u[b2] * u[b].conj();
            match (outcome, b == b2) {
                (0, _) => uu,
                (_, true) => Complex64::new(1.0, 0.0) - uu,
                (_, false) => -uu,
            }
        };
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (a, row) in m.iter_mut().enumerate() {
            for (a2, cell) in row.iter_mut().enumerate() {
                for b in 0..2 {
                    for b2 in 0..2 {
                        *cell += rho[(idx(a, b), idx(a2, b2))] * proj(b2, b);
                    }
                }
            }
        }
        let p = m[0][0].re + m[1][1].re;
        if p > 1e-14 {
            for cell in m.iter_mut().flatten() {
                *cell /= p;
            }
            total += p * entropy_2x2(m);
        }
    }
    total
}

/// Two-qubit discord with the second qubit measured: the best of a
/// 64 x 64 x 64 grid of the three measurement angles, polished by a
/// compass search.
pub fn grid_discord(rho: &CMat) -> f64 {
    let mut rho_b = CMat::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            for b2 in 0..2 {
                rho_b[(b, b2)] += rho[(2 * a + b, 2 * a + b2)];
            }
        }
    }
    let s_b = entropy_hermitian(&rho_b);
    let s_ab = entropy_hermitian(rho);

    let steps = 64;
    let f = |x: &[f64; 3]| measured_entropy_2x2(rho, x[0], x[1], x[2]);
    let mut best = ([0.0; 3], f64::INFINITY);
    for i in 0..steps {
        let p1 = std::f64::consts::FRAC_PI_2 * i as f64 / (steps - 1) as f64;
        for j in 0..steps {
            let p2 = std::f64::consts::TAU * j as f64 / steps as f64;
            for k in 0..steps {
                let x = [p1, p2, std::f64::consts::TAU * k as f64 / steps as f64];
                let v = f(&x);
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
    }
    let (mut x, mut fx) = best;
    let mut h = std::f64::consts::TAU / steps as f64;
    while h > 1e-10 {
        let mut improved = false;
        for d in 0..3 {
            for s in [h, -h] {
                let mut y = x;
                y[d] += s;
                let fy = f(&y);
                if fy < fx {
                    (x, fx, improved) = (y, fy, true);
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    s_b - s_ab + fx
}

/// Fixed-seed random two-qubit states of ranks 1 to 4.
pub fn random_two_qubit_states(count: usize, seed: u64) -> Vec<CMat> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let rank = 1 + i % 4;
            let parts: Vec<f64> = (0..2 * 4 * rank).map(|_| rng.random_range(-1.0..1.0)).collect();
            density_from(&parts, 4, rank)
        })
        .collect()
}
