//! Small dense linear-algebra helpers shared across the crate.
//!
//! Public matrices are `nalgebra` complex matrices. Large real-symmetric
//! eigenproblems (the Hamiltonian blocks) are routed through `faer`, which is
//! considerably faster than `nalgebra` above a few hundred rows.

use std::sync::Once;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Eigenvalues below this magnitude are treated as exact zeros in entropies.
pub const ENTROPY_ZERO: f64 = 1e-14;

/// Above this size real-symmetric problems go through faer.
const FAER_THRESHOLD: usize = 96;

static FAER_SEQUENTIAL: Once = Once::new();

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker product `a ⊗ b`; the row index of `a` is the slow one.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(c)
}

/// Largest entry of `|m - m†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry magnitude, used as a scale for relative tolerances.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh_real(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), RMatrix::zeros(0, 0)));
    }
    if n < FAER_THRESHOLD {
        let eig = nalgebra::SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = RMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        return Ok((values, vectors));
    }
    FAER_SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|i| s[i]).collect();
    let vectors = RMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((values, vectors))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvalsh_real(m: &RMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n < FAER_THRESHOLD {
        let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        return Ok(v);
    }
    FAER_SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    fm.self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if is_real(m) {
        let (values, vectors) = eigh_real(&m.map(|z| z.re))?;
        return Ok((values, to_complex(&vectors)));
    }
    if n >= FAER_THRESHOLD {
        FAER_SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let fm = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
            let z = m[(i, j)];
            faer::c64::new(z.re, z.im)
        });
        let evd = fm
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).map(|i| s[i].re).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| {
            let z = u[(i, j)];
            Complex64::new(z.re, z.im)
        });
        return Ok((values, vectors));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Eigenvalues of a complex Hermitian matrix (unsorted).
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)].norm_sqr();
            let mean = 0.5 * (a + d);
            let half = (0.25 * (a - d) * (a - d) + b).sqrt();
            vec![mean - half, mean + half]
        }
        _ => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    }
}

/// Shannon entropy in bits of a (possibly unnormalised) spectrum, with
/// entries below [`ENTROPY_ZERO`] dropped.
pub fn entropy_bits(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&p| p > ENTROPY_ZERO)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `-Σ p log2 p` for the normalised spectrum `values / total`.
pub fn normalized_entropy_bits(values: &[f64], total: f64) -> f64 {
    if total <= ENTROPY_ZERO {
        return 0.0;
    }
    values
        .iter()
        .map(|&v| v / total)
        .filter(|&p| p > ENTROPY_ZERO)
        .map(|p| -p * p.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kron_orders_left_factor_slow() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let b = CMatrix::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 2)], c(2.0));
        assert_eq!(k[(1, 3)], c(2.0));
        assert_eq!(k[(0, 1)], c(0.0));
    }

    #[test]
    fn real_eigensolvers_agree_across_threshold() {
        let n = FAER_THRESHOLD + 20;
        let m = RMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (a * 0.37 + b * 0.11).sin() + if i == j { i as f64 * 0.1 } else { 0.0 }
        });
        let (fast, vecs) = eigh_real(&m).unwrap();
        let mut slow: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        slow.sort_by(f64::total_cmp);
        for (a, b) in fast.iter().zip(&slow) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        let recon = &vecs * RMatrix::from_diagonal(&DVector::from_vec(fast)) * vecs.transpose();
        assert!((recon - m).abs().max() < 1e-10);
    }

    #[test]
    fn complex_eigh_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0),
                Complex64::new(0.0, 1.0),
                c(0.0),
                Complex64::new(0.0, -1.0),
                c(1.0),
                c(0.5),
                c(0.0),
                c(0.5),
                c(3.0),
            ],
        );
        let (vals, vecs) = eigh(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(3, vals.iter().map(|&v| c(v))));
        let recon = &vecs * d * vecs.adjoint();
        assert!(frobenius(&(recon - m)) < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form_matches_general() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.3), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), c(0.7)]);
        let mut fast = eigvalsh(&m);
        fast.sort_by(f64::total_cmp);
        let mut slow: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        slow.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(fast[0], slow[0], epsilon = 1e-14);
        assert_abs_diff_eq!(fast[1], slow[1], epsilon = 1e-14);
    }

    #[test]
    fn entropy_ignores_numerical_zeros() {
        assert_eq!(entropy_bits(&[1.0, 1e-16, -1e-15]), 0.0);
        assert_abs_diff_eq!(entropy_bits(&[0.5, 0.5]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(normalized_entropy_bits(&[2.0, 2.0, 2.0, 2.0], 8.0), 2.0, epsilon = 1e-15);
    }
}
