//! Benchmark fixtures shared by the criterion targets.

use rabicorr::model::{Eigensystem, ModelParams, ThermalConfig};
use rabicorr::statespace::{Basis, Ensemble};
use rabicorr::units::reference_tau;

/// Thermal field-vs-qubits state of the resonant model at `τ_c`.
pub fn thermal_fixture(qubits: usize, g: f64) -> Ensemble {
    let params = ModelParams::resonant(qubits, 24, Basis::DickeSymmetric, g).expect("valid parameters");
    let system = Eigensystem::solve(&params).expect("diagonalises");
    system.thermal_ensemble(&ThermalConfig::new(reference_tau()), 1e-10).expect("thermal state")
}
